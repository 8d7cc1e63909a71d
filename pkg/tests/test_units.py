from artifact.units import energy_micro_kwh, format_micro, from_micro, pico_to_micro, to_micro


def test_to_micro_rounds_to_nearest():
    assert to_micro(0.154) == 154_000
    assert to_micro(0.0000004) == 0
    assert to_micro(0.0000006) == 1


def test_energy_of_coffee_machine_slot():
    # 2555.84 W for a quarter hour
    assert energy_micro_kwh(2555.84, 0.25) == 638_960


def test_pico_rounding_is_half_up():
    assert pico_to_micro(499_999) == 0
    assert pico_to_micro(500_000) == 1
    assert pico_to_micro(1_500_000) == 2


def test_format_micro():
    assert format_micro(154_000) == "0.154000"
    assert format_micro(-1) == "-0.000001"
    assert from_micro(2_500_000) == 2.5
