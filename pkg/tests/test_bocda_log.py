import io

from tapscan.bocda import bocda_log


def test_nested_progress_lines():
	out = io.StringIO()
	log = bocda_log.Log(out)
	assert log.logPush("analyzing ...\n") == 1
	assert log.log("peak trace ...") == 1
	log.log(" OK\n")
	assert log.logPop("... OK\n") == 0
	assert out.getvalue() == "analyzing ...\n  peak trace ... OK\n... OK\n"


def test_hanging_line_is_closed_on_push():
	out = io.StringIO()
	log = bocda_log.Log(out)
	log.log("reading channel ...")
	log.logPush()
	log.log("segment\n")
	log.logPop()
	assert out.getvalue() == "reading channel ...\n  segment\n"


def test_warnings_reach_stderr_unless_quiet(capsys):
	log = bocda_log.Log(None, verbose=False, quiet=False)
	log.log("hidden\n")
	log.warn("WARNING: shown\n")
	assert capsys.readouterr().err == "WARNING: shown\n"
	log.configure(None, verbose=False, quiet=True)
	log.warn("WARNING: dropped\n")
	assert capsys.readouterr().err == ""
