from wmlab.workmeter import UNITS_PER_SECOND, add_work, measure_work


def test_measure_work_accumulates():
    with measure_work() as meter:
        add_work(500)
        add_work(250)
    assert meter.units == 750
    assert meter.seconds == 750 / UNITS_PER_SECOND


def test_nested_meters_both_count():
    with measure_work() as outer:
        add_work(100)
        with measure_work() as inner:
            add_work(40)
        add_work(1)
    assert inner.units == 40
    assert outer.units == 141


def test_add_work_without_meter_is_noop():
    add_work(999)
    with measure_work() as meter:
        pass
    assert meter.units == 0


def test_meters_are_deterministic():
    def job():
        with measure_work() as meter:
            for _ in range(10):
                add_work(7)
        return meter.units

    assert job() == job() == 70
