import numpy as np
import pytest
from hypothesis import given, strategies as st

from tapscan.bocda import ConfigError, DomainError
from tapscan.bocda import bocda_fiber
from tapscan.bocda.util import conf


##################################################
# brillouinShift


def test_brillouin_shift_standard_fiber():
	bfs = bocda_fiber.brillouinShift(1.447, 5760.0, 1550e-9)
	assert bfs == pytest.approx(10.754e9, abs=1e6)


def test_brillouin_shift_zero_velocity():
	assert bocda_fiber.brillouinShift(1.447, 0.0, 1550e-9) == 0.0


@given(
	n_eff=st.floats(min_value=1.0, max_value=2.0),
	v_ac=st.floats(min_value=1.0, max_value=1e4),
	wavelength=st.floats(min_value=400e-9, max_value=2000e-9),
)
def test_brillouin_shift_linear_in_velocity(n_eff, v_ac, wavelength):
	once = bocda_fiber.brillouinShift(n_eff, v_ac, wavelength)
	twice = bocda_fiber.brillouinShift(n_eff, 2.0 * v_ac, wavelength)
	assert twice == 2.0 * once


@pytest.mark.parametrize("args", [(0.0, 5800.0, 1550e-9), (-1.4, 5800.0, 1550e-9), (1.447, 5800.0, 0.0), (1.447, -1.0, 1550e-9)])
def test_brillouin_shift_domain(args):
	with pytest.raises(DomainError):
		bocda_fiber.brillouinShift(*args)


def test_presets_put_980a_150mhz_above_smf28():
	smf = bocda_fiber.FiberSegment(length=1.0, **bocda_fiber.PRESETS['SMF28'])
	hi = bocda_fiber.FiberSegment(length=1.0, **bocda_fiber.PRESETS['980A'])
	assert smf.bfs() == pytest.approx(10.85e9, abs=5e6)
	assert hi.bfs() - smf.bfs() == pytest.approx(150e6, abs=1e6)


def test_group_velocity_default_index():
	channel = bocda_fiber.Channel([bocda_fiber.FiberSegment(length=3.0)])
	assert bocda_fiber.groupVelocity(channel) == pytest.approx(bocda_fiber.C_VACUUM / 1.468)


##################################################
# localProfile


@given(z=st.floats(min_value=0.0, max_value=2.5))
def test_local_profile_homogeneous(z):
	seg = bocda_fiber.FiberSegment(length=2.5)
	channel = bocda_fiber.Channel([seg])
	p = bocda_fiber.localProfile(channel, z)
	assert p.bfs == seg.bfs()
	assert p.coupling == 1.0
	assert p.bfs_offset == 0.0
	assert p.transmission_to_z == pytest.approx(10.0 ** (-seg.attenuation * z / 10.0))


def test_local_profile_bend_reduces_coupling_only():
	seg = bocda_fiber.FiberSegment(length=2.5)
	channel = bocda_fiber.Channel([seg], [bocda_fiber.bendTap(1.5, loss_fraction=0.05, extent=0.10)])
	center = bocda_fiber.localProfile(channel, 1.5)
	assert center.coupling == pytest.approx(1.0 - 3.0 * 0.05)
	assert center.bfs == seg.bfs()
	inside = bocda_fiber.localProfile(channel, 1.47)
	assert 1.0 - 3.0 * 0.05 < inside.coupling < 1.0
	outside = bocda_fiber.localProfile(channel, 1.6)
	assert outside.coupling == 1.0
	assert outside.transmission_to_z == pytest.approx(0.95 * bocda_fiber.localProfile(bocda_fiber.Channel([seg]), 1.6).transmission_to_z)


def test_local_profile_tap_downstream_transmission():
	seg = bocda_fiber.FiberSegment(length=3.0)
	bare = bocda_fiber.Channel([seg])
	tapped = bocda_fiber.Channel([seg], [bocda_fiber.tapCoupler(2.0, split_fraction=0.01)])
	before = bocda_fiber.localProfile(tapped, 1.9)
	after = bocda_fiber.localProfile(tapped, 2.1)
	assert before.transmission_to_z == pytest.approx(bocda_fiber.localProfile(bare, 1.9).transmission_to_z)
	assert after.transmission_to_z == pytest.approx(0.99 * bocda_fiber.localProfile(bare, 2.1).transmission_to_z)
	# the excursion rides on bfs_offset; the segment shift itself is untouched
	at = bocda_fiber.localProfile(tapped, 2.0)
	assert at.bfs == seg.bfs()
	assert at.bfs_offset == pytest.approx(5e6)


def test_local_profile_break_blocks_light():
	channel = bocda_fiber.Channel([bocda_fiber.FiberSegment(length=2.0)], [bocda_fiber.fiberBreak(1.0)])
	assert bocda_fiber.localProfile(channel, 1.5).transmission_to_z == 0.0


@pytest.mark.parametrize("z", [-0.01, 2.5001])
def test_local_profile_outside_channel(z, cleanChannel):
	with pytest.raises(DomainError):
		bocda_fiber.localProfile(cleanChannel, z)


@given(
	losses=st.lists(st.floats(min_value=0.001, max_value=0.5), min_size=1, max_size=4),
	data=st.data(),
)
def test_profile_invariants(losses, data):
	positions = sorted(data.draw(st.lists(st.floats(min_value=0.1, max_value=2.9), min_size=len(losses), max_size=len(losses), unique=True)))
	features = list()
	for pos,loss in zip(positions, losses):
		if data.draw(st.booleans()):
			features.append(bocda_fiber.bendTap(pos, loss_fraction=loss, extent=0.05))
		else:
			features.append(bocda_fiber.tapCoupler(pos, split_fraction=loss))
	channel = bocda_fiber.Channel([bocda_fiber.FiberSegment(length=1.5), bocda_fiber.FiberSegment(length=1.5, v_ac=5900.0)], features)
	z = np.linspace(0.0, 3.0, 601)
	prof = bocda_fiber.sampleProfile(channel, z)
	assert np.all(np.diff(prof.transmission_to_z) <= 1e-15)
	expected = np.where(z < 1.5, channel.segments[0].bfs(), channel.segments[1].bfs())
	assert np.array_equal(prof.bfs, expected)


##################################################
# validateChannel


def test_validate_well_formed(insertChannel):
	assert bocda_fiber.validateChannel(insertChannel) == []


def test_validate_feature_beyond_end(cleanChannel):
	channel = bocda_fiber.Channel(cleanChannel.segments, [bocda_fiber.splice(cleanChannel.totalLength + 1.0)])
	violations = bocda_fiber.validateChannel(channel)
	assert [v.rule for v in violations] == ['position-range']
	assert 'feature[0]' in violations[0].subject


def test_validate_overlapping_segments():
	channel = bocda_fiber.Channel([
		bocda_fiber.FiberSegment(length=1.0, start=0.0),
		bocda_fiber.FiberSegment(length=1.0, start=0.5),
	])
	violations = bocda_fiber.validateChannel(channel)
	assert [v.rule for v in violations] == ['partition']
	assert 'overlap' in violations[0].detail


def test_validate_declared_length():
	channel = bocda_fiber.Channel([bocda_fiber.FiberSegment(length=1.0)], length=1.1)
	assert [v.rule for v in bocda_fiber.validateChannel(channel)] == ['partition']
	channel = bocda_fiber.Channel([bocda_fiber.FiberSegment(length=1.0)], length=1.0 + 5e-7)
	assert bocda_fiber.validateChannel(channel) == []


def test_validate_feature_rules(cleanChannel):
	channel = bocda_fiber.Channel(cleanChannel.segments, [
		bocda_fiber.bendTap(1.0, loss_fraction=0.6),
		bocda_fiber.splice(0.5),
		bocda_fiber.splice(2.0),
		bocda_fiber.connector(2.0),
	])
	rules = [v.rule for v in bocda_fiber.validateChannel(channel)]
	assert rules == ['loss_fraction-range', 'order', 'shared-position']


def test_validate_segment_ranges():
	channel = bocda_fiber.Channel([bocda_fiber.FiberSegment(length=0.0, n_eff=2.5, gain_linewidth=0.0)])
	rules = [v.rule for v in bocda_fiber.validateChannel(channel)]
	assert rules == ['length', 'n_eff-range', 'gain_linewidth']


##################################################
# channel files


CHANNEL_TEXT = """
# foreign insert
WAVELENGTH 1550n
NAME "insert test"
SEGMENT preset=SMF28 length=1.1
SEGMENT preset=980A length=1.0
SEGMENT preset=SMF28 length=1.0 atten_db_per_m=0.001
FEATURE kind=bend position=0.5 loss_fraction=0.02 extent=10c
FEATURE kind=tap position=2.5 split_fraction=0.01
"""


def test_load_channel(writeConf):
	channel = bocda_fiber.loadChannel(writeConf('channel.conf', CHANNEL_TEXT))
	assert channel.name == 'insert test'
	assert channel.totalLength == pytest.approx(3.1)
	assert [s.label for s in channel.segments] == ['SMF28', '980A', 'SMF28']
	assert channel.segments[2].attenuation == 0.001
	assert [f.kind for f in channel.features] == [bocda_fiber.BEND, bocda_fiber.TAP]
	assert channel.features[0].extent == pytest.approx(0.10)


def test_channel_text_reparses_to_same_digest(writeConf):
	channel = bocda_fiber.loadChannel(writeConf('channel.conf', CHANNEL_TEXT))
	again = bocda_fiber.loadChannel(writeConf('again.conf', bocda_fiber.channelText(channel)))
	assert again == channel
	assert bocda_fiber.digest(again) == bocda_fiber.digest(channel)


def test_digest_changes_with_channel(insertChannel, cleanChannel):
	assert bocda_fiber.digest(insertChannel) != bocda_fiber.digest(cleanChannel)
	assert len(bocda_fiber.digest(cleanChannel)) == 64


def test_load_channel_rejects_unknown_keys(writeConf):
	path = writeConf('bad.conf', "SEGMENT length=1 colour=blue\nFEATURE kind=wormhole position=0.5\nGAIN 3\n")
	with pytest.raises(ConfigError) as info:
		bocda_fiber.loadChannel(path)
	rules = sorted(v.rule for v in info.value.violations)
	assert rules == ['unknown-key', 'unknown-keyword', 'unknown-kind']
	assert info.value.asDict()['error'] == 'configuration'


def test_load_channel_reports_invariant_violations(writeConf):
	path = writeConf('bad.conf', "SEGMENT length=1\nFEATURE kind=splice position=3\n")
	with pytest.raises(ConfigError) as info:
		bocda_fiber.loadChannel(path)
	assert [v.rule for v in info.value.violations] == ['position-range']
	assert bocda_fiber.loadChannel(path, validate=False).features[0].position == 3.0


def test_include_loop(writeConf):
	a = writeConf('a.conf', "INCLUDE b.conf\n")
	writeConf('b.conf', "INCLUDE a.conf\n")
	with pytest.raises(ConfigError) as info:
		conf.readRecords(a)
	assert info.value.violations[0].rule == 'include-loop'


@pytest.mark.parametrize("text,value", [("47G", 47e9), ("699k", 699e3), ("1550n", 1550e-9), ("2.5c", 0.025), ("2.5m", 0.0025), ("25M", 25e6), ("1e-3", 1e-3)])
def test_quantity(text, value):
	assert conf.quantity(text) == pytest.approx(value)
