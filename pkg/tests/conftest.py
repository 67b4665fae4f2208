import os

import hypothesis
import numpy as np
import pytest

from tapscan.bocda import bocda_fiber, bocda_log


np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=200, deadline=None)
hypothesis.settings.register_profile("default", deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(autouse=True)
def quietLog():
	# library progress messages go nowhere unless a test captures them
	bocda_log.getLogger().configure(None, verbose=False, quiet=True)
	yield
	bocda_log.getLogger().configure(None, verbose=False, quiet=True)
#quietLog()


@pytest.fixture
def smf28():
	return bocda_fiber.FiberSegment(length=2.5)
#smf28()


@pytest.fixture
def cleanChannel():
	return bocda_fiber.Channel([bocda_fiber.FiberSegment(length=2.5)])
#cleanChannel()


@pytest.fixture
def insertChannel():
	a = bocda_fiber.PRESETS['SMF28']
	b = bocda_fiber.PRESETS['980A']
	return bocda_fiber.Channel([
		bocda_fiber.FiberSegment(length=1.1, label='SMF28', **a),
		bocda_fiber.FiberSegment(length=1.0, label='980A', **b),
		bocda_fiber.FiberSegment(length=1.0, label='SMF28', **a),
	])
#insertChannel()


@pytest.fixture
def writeConf(tmp_path):
	def write(name, text):
		path = tmp_path / name
		path.write_text(text)
		return str(path)
	return write
#writeConf()
