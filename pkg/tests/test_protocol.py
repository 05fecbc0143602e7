import json
import math
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magsteer.actuation import Mode
from magsteer.protocol import (
    MAX_LINE_BYTES,
    ProtocolError,
    ProtocolMessage,
    format_command,
    format_telemetry,
    message_to_command,
    parse_command,
    parse_telemetry,
)

VECTORS = json.loads((Path(__file__).parent / "data" / "protocol_vectors.json").read_text())


class TestSharedVectors:
    @pytest.mark.parametrize("case", VECTORS["valid"], ids=lambda c: c["line"][:40])
    def test_valid_lines_parse(self, case):
        msg = parse_command(case["line"])
        assert msg.verb == case["verb"]
        assert set(msg.args) == set(case["args"])
        for key, value in case["args"].items():
            if isinstance(value, str):
                assert msg.args[key] == value
            else:
                assert msg.args[key] == pytest.approx(value)

    @pytest.mark.parametrize("case", VECTORS["invalid"], ids=lambda c: c["line"][:40] or "<empty>")
    def test_invalid_lines_rejected(self, case):
        with pytest.raises(ProtocolError) as err:
            parse_command(case["line"])
        assert err.value.code == case["code"]


class TestParse:
    def test_roll_example(self):
        msg = parse_command("ROLL A=2.0 ALPHA=90 GAMMA=90 F=5")
        cmd = message_to_command(msg)
        assert cmd.mode is Mode.ROLL
        assert cmd.magnitude_t == pytest.approx(2e-3)
        assert cmd.polar_alpha == pytest.approx(math.pi / 2)
        assert cmd.azimuth_gamma == pytest.approx(math.pi / 2)
        assert cmd.omega == pytest.approx(10 * math.pi)

    def test_stop_has_no_args(self):
        msg = parse_command("STOP")
        assert msg.verb == "STOP" and msg.args == {}
        assert message_to_command(msg).mode is Mode.STOP

    def test_roll_gamma_defaults_to_90(self):
        cmd = message_to_command(parse_command("ROLL A=1 F=2"))
        assert cmd.azimuth_gamma == pytest.approx(math.pi / 2)

    def test_spin_gamma_defaults_to_0(self):
        cmd = message_to_command(parse_command("SPIN A=1 F=2"))
        assert cmd.azimuth_gamma == 0.0

    def test_verbs_case_insensitive(self):
        assert parse_command("ping").verb == "PING"

    def test_oversized_line_rejected(self):
        with pytest.raises(ProtocolError) as err:
            parse_command("ORIENT THETA=1 " + "x" * MAX_LINE_BYTES)
        assert err.value.code == "bad-arg"

    def test_non_actuation_verbs_build_no_command(self):
        for line in ("PING", "SUBSCRIBE DIV=1", "AXIS LX=1", "SELECT_ASSEMBLY NAME=twod"):
            assert message_to_command(parse_command(line)) is None

    def test_orient_direction_from_angles(self):
        cmd = message_to_command(parse_command("ORIENT THETA=90"))
        assert cmd.direction == pytest.approx((0.0, 1.0, 0.0), abs=1e-12)
        up = message_to_command(parse_command("ORIENT THETA=0 PHI=90"))
        assert up.direction == pytest.approx((0.0, 0.0, 1.0), abs=1e-12)


def _value_strategy(spec):
    if spec.kind == "word":
        if spec.choices:
            return st.sampled_from(spec.choices)
        return st.from_regex(r"[a-z0-9_-]{1,16}", fullmatch=True)
    if spec.kind == "int":
        return st.integers(int(spec.lo), int(spec.hi))
    return st.floats(
        max(spec.lo, -1e6), min(spec.hi, 1e6), allow_nan=False, allow_infinity=False
    )


@st.composite
def protocol_messages(draw):
    from magsteer.protocol import VERB_KEYS

    verb = draw(st.sampled_from(sorted(VERB_KEYS)))
    keyset = VERB_KEYS[verb]
    keys = draw(st.lists(st.sampled_from(sorted(keyset)), unique=True)) if keyset else []
    args = {key: draw(_value_strategy(keyset[key])) for key in keys}
    return ProtocolMessage(verb=verb, args=args)


class TestRoundTrip:
    @given(protocol_messages())
    @settings(max_examples=300, deadline=None)
    def test_format_parse_round_trip(self, msg):
        line = format_command(msg)
        reparsed = parse_command(line)
        assert reparsed.verb == msg.verb
        assert set(reparsed.args) == set(msg.args)
        for key, value in msg.args.items():
            if isinstance(value, str):
                assert reparsed.args[key] == value
            else:
                assert float(reparsed.args[key]) == pytest.approx(float(value), rel=1e-15)

    def test_documented_example(self):
        original = parse_command("ORIENT THETA=45 S=0.8")
        assert parse_command(format_command(original)) == original


class TestFuzzing:
    @given(st.binary(max_size=64))
    @settings(max_examples=500, deadline=None)
    def test_random_bytes_never_crash(self, blob):
        line = blob.decode("utf-8", errors="replace")
        try:
            parse_command(line)
        except ProtocolError:
            pass  # the one acceptable failure mode


class TestTelemetry:
    def test_round_trip(self):
        line = format_telemetry(
            0.25,
            "ROLL",
            [0.5, -0.5, 0, 0, 0, 0],
            [0.1, 0.2, 0.3],
            position_um=[1, 2, 2.25],
            moment_dir=[0, 0, 1],
        )
        rec = parse_telemetry(line)
        assert rec.t == 0.25
        assert rec.mode == "ROLL"
        assert rec.currents_a == (0.5, -0.5, 0, 0, 0, 0)
        assert rec.field_mt == (0.1, 0.2, 0.3)
        assert rec.position_um == (1, 2, 2.25)
        assert rec.moment_dir == (0, 0, 1)

    def test_optional_blocks(self):
        line = format_telemetry(0.0, "STOP", [0, 0], [0, 0, 0])
        rec = parse_telemetry(line)
        assert rec.position_um is None and rec.moment_dir is None

    def test_rejects_non_tlm(self):
        with pytest.raises(ValueError):
            parse_telemetry("OK PONG")
