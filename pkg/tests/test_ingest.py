import gzip
from decimal import Decimal
from pathlib import Path

import numpy as np
import pytest

from liqgeom.book import bin_side, cumulate, detect_plateau, mid_price, window_average
from liqgeom.errors import BadHeader, CrossedBook, ParseError, UnsortedInput
from liqgeom.ingest import (
    build_snapshots,
    read_depth_csv,
    read_snapshot_csv,
    sniff_format,
    snapshot_rows,
)

DATA = Path(__file__).parent / "data"
TICK = 0.01


def snaps(name):
    return list(build_snapshots(read_depth_csv(DATA / name), TICK))


def test_records_parse_with_decimal_prices():
    recs = list(read_depth_csv(DATA / "depth_two_venues.csv"))
    assert len(recs) == 12
    assert recs[0].price == Decimal("100.00")
    assert recs[0].side == "bid" and recs[3].side == "ask"


def test_two_venue_snapshots_match_hand_aggregation():
    s0, s1 = snaps("depth_two_venues.csv")
    assert s0.timestamp == 1700000000
    # XNAS 300 + ARCA 200 at 100.00; XNAS 99.98 overwritten 100 -> 400
    assert s0.bids == ((100.00, 500.0), (99.98, 400.0))
    assert s0.asks == ((100.02, 175.0), (100.03, 50.0))
    # ARCA 99.97 cancelled within the second; no carry-over from s0
    assert s1.bids == ((100.01, 10.0),)
    assert s1.asks == ((100.05, 50.0),)


def test_two_venue_mids_and_profiles():
    s0, s1 = snaps("depth_two_venues.csv")
    assert mid_price(s0) == pytest.approx(100.01, abs=1e-12)
    assert mid_price(s1) == pytest.approx(100.03, abs=1e-12)
    qb = bin_side(s0, "bid", K=5)
    qa = bin_side(s0, "ask", K=5)
    np.testing.assert_array_equal(qb.q, [500, 0, 400, 0, 0])
    np.testing.assert_array_equal(qa.q, [175, 50, 0, 0, 0])
    np.testing.assert_array_equal(cumulate(qb).S, [500, 500, 900, 900, 900])
    np.testing.assert_array_equal(cumulate(qa).S, [175, 225, 225, 225, 225])
    np.testing.assert_array_equal(bin_side(s1, "bid", K=5).q, [0, 10, 0, 0, 0])
    np.testing.assert_array_equal(bin_side(s1, "ask", K=5).q, [0, 50, 0, 0, 0])


def test_two_venue_window_average():
    s0, s1 = snaps("depth_two_venues.csv")
    avg = window_average([cumulate(bin_side(s, "bid", K=5)) for s in (s0, s1)])
    np.testing.assert_array_equal(avg.S, [250, 255, 455, 455, 455])


def test_sparse_fixture_plateau():
    (s,) = snaps("depth_sparse.csv")
    S = cumulate(bin_side(s, "bid", K=6))
    np.testing.assert_array_equal(S.S, [7, 7, 7, 7, 10, 10])
    assert detect_plateau(S, min_run=2) == [(1, 3)]
    np.testing.assert_array_equal(bin_side(s, "ask", K=6).q, [4, 0, 0, 0, 6, 0])


def test_crossed_book_reports_second():
    with pytest.raises(CrossedBook) as info:
        snaps("depth_crossed.csv")
    assert info.value.timestamp == 1700000005


def test_parse_error_names_line_and_column():
    with pytest.raises(ParseError) as info:
        snaps("depth_bad_size.csv")
    assert info.value.line == 3
    assert info.value.column == "size"


def test_unsorted_seconds_rejected():
    with pytest.raises(UnsortedInput):
        snaps("depth_unsorted.csv")


def test_bad_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(BadHeader):
        list(read_depth_csv(p))


def test_gzip_input_matches_plain(tmp_path):
    src = (DATA / "depth_two_venues.csv").read_bytes()
    gz = tmp_path / "depth.csv.gz"
    gz.write_bytes(gzip.compress(src))
    assert list(build_snapshots(read_depth_csv(gz), TICK)) == snaps("depth_two_venues.csv")


def test_snapshot_csv_round_trip(tmp_path):
    original = snaps("depth_two_venues.csv")
    p = tmp_path / "snaps.csv"
    p.write_text("timestamp,side,price,size\n"
                 + "".join(line for s in original for line in snapshot_rows(s)))
    assert sniff_format(p) == "snapshot"
    assert sniff_format(DATA / "depth_two_venues.csv") == "depth"
    assert list(read_snapshot_csv(p, TICK)) == original
