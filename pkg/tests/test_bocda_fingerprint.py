import pytest

from tapscan.bocda import ConfigError
from tapscan.bocda import bocda_detect
from tapscan.bocda.bocda_fingerprint import FingerprintDb


MANUFACTURERS = {
	'Thorlabs': (10.850e9, 1.5e6),
	'Newport': (10.854e9, 1.5e6),
	'Opneti': (10.860e9, 1.5e6),
}


def test_entries_ordered_by_mean():
	db = FingerprintDb.fromEntries(MANUFACTURERS)
	assert list(db.entries()) == ['Thorlabs', 'Newport', 'Opneti']
	assert db.getDatabaseSetting('schema', int) == 1
	assert db.validate() == []


def test_ambiguous_entries_rejected():
	entries = dict(MANUFACTURERS, Corning=(10.852e9, 1.5e6))
	with pytest.raises(ConfigError) as info:
		FingerprintDb.fromEntries(entries)
	assert {v.rule for v in info.value.violations} == {'ambiguous'}


def test_tolerance_must_be_positive():
	with pytest.raises(ConfigError) as info:
		FingerprintDb.fromEntries({'Thorlabs': (10.850e9, 0.0)})
	assert [v.rule for v in info.value.violations] == ['tolerance']


@pytest.mark.parametrize("value,label", [
	(10.8503e9, 'Thorlabs'),
	(10.8545e9, 'Newport'),
	(10.8588e9, 'Opneti'),
	(10.852e9, bocda_detect.UNKNOWN),
	(11.0e9, bocda_detect.UNKNOWN),
])
def test_classify(value, label):
	db = FingerprintDb.fromEntries(MANUFACTURERS)
	assert bocda_detect.classifyFingerprint(value, db) == label


def test_classify_event():
	db = FingerprintDb.fromEntries(MANUFACTURERS)
	event = bocda_detect.Event(bocda_detect.FOREIGN_SEGMENT, 0.5, 0.06, 10e6, 0.99, detail={'mean_bfs': 10.8601e9})
	assert bocda_detect.classifyFingerprint(event, db) == 'Opneti'


def test_load(writeConf, tmp_path):
	path = writeConf('fingerprints.conf', "# manufacturers\nFIBER Thorlabs 10.850G 1.5M\nFIBER Newport 10.854G 1.5M\n")
	dbFile = str(tmp_path / "fingerprints.sqlite")
	db = FingerprintDb.load(path, dbFile)
	assert db.entries() == {'Thorlabs': (pytest.approx(10.850e9), pytest.approx(1.5e6)), 'Newport': (pytest.approx(10.854e9), pytest.approx(1.5e6))}
	assert (tmp_path / "fingerprints.sqlite").exists()


def test_load_errors(writeConf):
	path = writeConf('bad.conf', "FIBER Thorlabs 10.850G\nFIBER Newport 10.854G 1.5M\nFIBER Newport 10.855G 1.5M\nFIBRE Opneti 10.86G 1M\nFIBER Corning fast 1M\n")
	with pytest.raises(ConfigError) as info:
		FingerprintDb.load(path)
	assert [v.rule for v in info.value.violations] == ['argument-count', 'duplicate-label', 'unknown-keyword', 'bad-value']
	assert info.value.source == path


def test_load_ambiguous_file(writeConf):
	path = writeConf('close.conf', "FIBER a 10.850G 3M\nFIBER b 10.854G 3M\n")
	with pytest.raises(ConfigError) as info:
		FingerprintDb.load(path)
	assert info.value.source == path
	assert info.value.violations[0].rule == 'ambiguous'
