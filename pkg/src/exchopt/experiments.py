"""Reproduction harness: test cases, the parameter-grid sweep, error metrics
and plot-ready CSV extracts.

The Monte Carlo benchmark simulates one normalized path set per parameter
combination and reprices every moneyness from it (payoff homogeneity in the
initial spots), which both speeds the sweep up an order of magnitude and
smooths error curves across moneyness via common random numbers.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import convention as conv
from . import heston, margrabe
from .errors import DegenerateConventionError, DomainError, NumericalError
from .models import AssetSpec, CorrelationStructure, HestonParams, TwoAssetModel
from .simulation import (
    McConfig,
    exchange_estimate_from_sample,
    simulate_terminal,
    validate_correlation,
)

__all__ = [
    "GridSpec",
    "ErrorReport",
    "ExclusionSummary",
    "TestCaseResult",
    "CONVENTIONS",
    "SUB_CENT_THRESHOLD",
    "reference_case_model",
    "run_test_case",
    "run_grid",
    "grid_exclusion_summary",
    "compute_metrics",
    "emit_plot_data",
    "results_csv",
    "write_results_csv",
    "read_results_csv",
    "report_json_payload",
]

CONVENTIONS = ("a=0", "a=1", "a_star", "a_star_bounded")
SUB_CENT_THRESHOLD = 0.01

RESULT_COLUMNS = (
    "T", "rho", "rho_X", "rho_Y", "s0Y", "convention", "a_value",
    "kX", "kY", "IX", "IY", "margrabe_price", "mc_price", "mc_stderr",
    "error", "implied_corr", "excluded", "exclusion_reason",
)

_BASE_PARAMS_HESTON = HestonParams(kappa=1.5, theta=0.15, nu=0.5, sigma0=0.15)


def _frange(start: float, stop: float, step: float) -> tuple[float, ...]:
    n = int(round((stop - start) / step)) + 1
    return tuple(start + i * step for i in range(n))


@dataclass(frozen=True)
class GridSpec:
    """Sweep specification; the defaults mirror the reference study exactly."""

    T_list: tuple[float, ...] = (0.05, 0.1, 0.25, 0.5, 1.0)
    s0x: float = 100.0
    s0y_list: tuple[float, ...] = _frange(80.0, 120.0, 4.0)
    lam_x: float = 1.0
    lam_y: float = 1.24
    heston: HestonParams = _BASE_PARAMS_HESTON
    rho_list: tuple[float, ...] = (-0.9, -0.7, -0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7, 0.9)
    rho_x_list: tuple[float, ...] = (-0.72, -0.42, -0.12, 0.18, 0.48)
    rho_y_list: tuple[float, ...] = (-0.61, -0.31, -0.01, 0.29, 0.59)
    mc: McConfig = field(default_factory=McConfig)
    conventions: tuple[str, ...] = CONVENTIONS

    def combos(self):
        """(iT, irho, irx, iry, T, rho, rho_x, rho_y) in canonical order."""
        for i_t, T in enumerate(self.T_list):
            for i_r, rho in enumerate(self.rho_list):
                for i_x, rho_x in enumerate(self.rho_x_list):
                    for i_y, rho_y in enumerate(self.rho_y_list):
                        yield i_t, i_r, i_x, i_y, T, rho, rho_x, rho_y

    def n_points(self) -> int:
        return (
            len(self.T_list) * len(self.rho_list) * len(self.rho_x_list)
            * len(self.rho_y_list) * len(self.s0y_list)
        )


@dataclass(frozen=True)
class ExclusionSummary:
    """Grid-point accounting: included + excluded categories == total."""

    total_points: int
    included: int
    invalid_correlation: int
    sub_cent: int
    degenerate_convention: int

    total_triples: int = 0
    invalid_triples: int = 0

    @property
    def invalid_triple_fraction(self) -> float:
        return self.invalid_triples / self.total_triples if self.total_triples else 0.0


@dataclass(frozen=True)
class ErrorReport:
    """Error metrics of one convention within one group of grid rows."""

    group: dict
    convention: str
    n_points: int
    mae: float
    mape: float
    rmse: float
    max_ae: float
    mstd: float
    atm_error: float

    @property
    def empty(self) -> bool:
        return self.n_points == 0


def _derived_seed(master: int, *indices: int) -> int:
    ss = np.random.SeedSequence((int(master),) + tuple(int(i) for i in indices))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def reference_case_model(case_id: int, s0y: float = 100.0) -> TwoAssetModel:
    """The two reference parameterisations; they differ only in rho_Y."""
    if case_id not in (1, 2):
        raise ValueError(f"case_id must be 1 or 2, got {case_id}")
    rho_y = -0.6 if case_id == 1 else 0.4
    return TwoAssetModel(
        heston=_BASE_PARAMS_HESTON,
        lam_x=1.5,
        lam_y=1.0,
        s0x=100.0,
        s0y=s0y,
        corr=CorrelationStructure(rho=0.5, rho_x=-0.4, rho_y=rho_y),
    )


@dataclass
class TestCaseResult:
    case_id: int
    T: float
    a_star: float
    a_star_parametric: float
    observables: heston.SmileObservables
    smile_x: heston.Smile
    smile_y: heston.Smile
    rows: list[dict]


def _convention_a(name: str, a_star: float | None) -> float:
    if name == "a=0":
        return 0.0
    if name == "a=1":
        return 1.0
    if name == "a_star":
        if a_star is None:
            raise DegenerateConventionError("a_star unavailable for this point")
        return a_star
    if name == "a_star_bounded":
        if a_star is None:
            raise DegenerateConventionError("a_star unavailable for this point")
        return conv.bound_a(a_star)
    raise ValueError(f"unknown convention {name!r}")


def _price_point(
    smile_x: heston.Smile,
    smile_y: heston.Smile,
    rho: float,
    x: float,
    y: float,
    T: float,
    a: float,
) -> tuple[float, float, float, float, float]:
    """(k_X, k_Y, I_X, I_Y, margrabe price) for one convention at one point."""
    k_x, k_y = conv.strikes(a, x, y)
    i_x = smile_x.vol_at_moneyness(k_x - x)
    i_y = smile_y.vol_at_moneyness(k_y - y)
    gamma = margrabe.convention_gamma(i_x, i_y, rho)
    return k_x, k_y, i_x, i_y, margrabe.margrabe_price(x, y, gamma, T)


def run_test_case(
    case_id: int,
    T: float = 0.05,
    mc: McConfig | None = None,
    s0y_values: Sequence[float] | None = None,
) -> TestCaseResult:
    """Per-moneyness comparison table for one reference case: smiles, prices
    under a = 0 / a = 1 / a*, the MC benchmark and implied correlations."""
    mc = mc or McConfig()
    model = reference_case_model(case_id)
    if s0y_values is None:
        s0y_values = _frange(80.0, 120.0, 2.0)

    params = model.heston
    smile_x = heston.build_smile_grid(params, model.asset_x, T, asset_id="X")
    smile_y = heston.build_smile_grid(params, model.asset_y, T, asset_id="Y")
    obs = heston.measure_smile_observables(params, model.asset_x, model.asset_y, T)
    a_star = conv.a_star_observables(obs, model.rho)
    limits = conv.ModelLimits(
        lam_x=model.lam_x, lam_y=model.lam_y,
        rho=model.rho, rho_x=model.corr.rho_x, rho_y=model.corr.rho_y,
    )
    a_param = conv.a_star_parametric(limits)

    sample = simulate_terminal(model, T, mc)
    x = math.log(model.s0x)
    rows: list[dict] = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", margrabe.ImpliedCorrelationBoundsWarning)
        for s0y in s0y_values:
            y = math.log(s0y)
            est = exchange_estimate_from_sample(sample, model.s0x, s0y, model.rho, mc)
            try:
                gamma_hat = margrabe.exchange_implied_vol(est.value, x, y, T)
            except (DomainError, NumericalError):
                gamma_hat = math.nan
            for name in ("a=0", "a=1", "a_star"):
                a = _convention_a(name, a_star)
                k_x, k_y, i_x, i_y, price = _price_point(
                    smile_x, smile_y, model.rho, x, y, T, a
                )
                rho_hat = (
                    margrabe.implied_correlation(gamma_hat, i_x, i_y)
                    if np.isfinite(gamma_hat)
                    else math.nan
                )
                rows.append(
                    {
                        "T": T, "rho": model.rho,
                        "rho_X": model.corr.rho_x, "rho_Y": model.corr.rho_y,
                        "s0Y": s0y, "convention": name, "a_value": a,
                        "kX": k_x, "kY": k_y, "IX": i_x, "IY": i_y,
                        "margrabe_price": price,
                        "mc_price": est.value, "mc_stderr": est.stderr,
                        "error": price - est.value,
                        "ratio": price / est.value if est.value != 0 else math.nan,
                        "implied_corr": rho_hat,
                        "excluded": False, "exclusion_reason": "",
                    }
                )
    return TestCaseResult(
        case_id=case_id, T=T, a_star=a_star, a_star_parametric=a_param,
        observables=obs, smile_x=smile_x, smile_y=smile_y, rows=rows,
    )


def grid_exclusion_summary(spec: GridSpec) -> ExclusionSummary:
    """Deterministic point counts (no simulation): how many correlation
    triples, and hence grid points, the PSD test excludes."""
    total_triples = 0
    invalid_triples = 0
    for rho in spec.rho_list:
        for rho_x in spec.rho_x_list:
            for rho_y in spec.rho_y_list:
                total_triples += 1
                c = CorrelationStructure(rho=rho, rho_x=rho_x, rho_y=rho_y)
                if not validate_correlation(c)[0]:
                    invalid_triples += 1
    points_per_triple = len(spec.T_list) * len(spec.s0y_list)
    return ExclusionSummary(
        total_points=spec.n_points(),
        included=(total_triples - invalid_triples) * points_per_triple,
        invalid_correlation=invalid_triples * points_per_triple,
        sub_cent=0,
        degenerate_convention=0,
        total_triples=total_triples,
        invalid_triples=invalid_triples,
    )


def _excluded_row(T, rho, rho_x, rho_y, s0y, name, reason, mc_price=None, mc_stderr=None):
    return {
        "T": T, "rho": rho, "rho_X": rho_x, "rho_Y": rho_y, "s0Y": s0y,
        "convention": name, "a_value": math.nan, "kX": math.nan, "kY": math.nan,
        "IX": math.nan, "IY": math.nan, "margrabe_price": math.nan,
        "mc_price": mc_price if mc_price is not None else math.nan,
        "mc_stderr": mc_stderr if mc_stderr is not None else math.nan,
        "error": math.nan, "implied_corr": math.nan,
        "excluded": True, "exclusion_reason": reason,
    }


def run_grid(spec: GridSpec) -> list[dict]:
    """Run the sweep; one row per (grid point, convention), excluded points
    included with their reason so the accounting closes."""
    smile_cache: dict[tuple, heston.Smile] = {}
    obs_cache: dict[tuple, heston.SmileObservables] = {}

    def leg_smile(asset_id: str, rho_sv: float, T: float) -> heston.Smile:
        key = (asset_id, rho_sv, T)
        if key not in smile_cache:
            lam = spec.lam_x if asset_id == "X" else spec.lam_y
            s0 = spec.s0x  # reference spot; lookups go through log-moneyness
            smile_cache[key] = heston.build_smile_grid(
                spec.heston, AssetSpec(lam=lam, rho_sv=rho_sv, s0=s0), T,
                asset_id=asset_id,
            )
        return smile_cache[key]

    def observables(rho_x: float, rho_y: float, T: float) -> heston.SmileObservables:
        key = (rho_x, rho_y, T)
        if key not in obs_cache:
            obs_cache[key] = heston.measure_smile_observables(
                spec.heston,
                AssetSpec(lam=spec.lam_x, rho_sv=rho_x, s0=spec.s0x),
                AssetSpec(lam=spec.lam_y, rho_sv=rho_y, s0=spec.s0x),
                T,
            )
        return obs_cache[key]

    x = math.log(spec.s0x)
    rows: list[dict] = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", margrabe.ImpliedCorrelationBoundsWarning)
        for i_t, i_r, i_x_, i_y_, T, rho, rho_x, rho_y in spec.combos():
            corr = CorrelationStructure(rho=rho, rho_x=rho_x, rho_y=rho_y)
            if not validate_correlation(corr)[0]:
                for s0y in spec.s0y_list:
                    for name in spec.conventions:
                        rows.append(
                            _excluded_row(T, rho, rho_x, rho_y, s0y, name,
                                          "invalid_correlation")
                        )
                continue

            smile_x = leg_smile("X", rho_x, T)
            smile_y = leg_smile("Y", rho_y, T)
            try:
                a_star = conv.a_star_observables(observables(rho_x, rho_y, T), rho)
            except (DegenerateConventionError, DomainError):
                a_star = None

            model = TwoAssetModel(
                heston=spec.heston, lam_x=spec.lam_x, lam_y=spec.lam_y,
                s0x=spec.s0x, s0y=spec.s0x, corr=corr,
            )
            mc = replace(spec.mc, seed=_derived_seed(spec.mc.seed, i_t, i_r, i_x_, i_y_))
            sample = simulate_terminal(model, T, mc)

            for s0y in spec.s0y_list:
                y = math.log(s0y)
                est = exchange_estimate_from_sample(sample, spec.s0x, s0y, rho, mc)
                if est.value < SUB_CENT_THRESHOLD:
                    for name in spec.conventions:
                        rows.append(
                            _excluded_row(T, rho, rho_x, rho_y, s0y, name,
                                          "sub_cent", est.value, est.stderr)
                        )
                    continue
                try:
                    gamma_hat = margrabe.exchange_implied_vol(est.value, x, y, T)
                except (DomainError, NumericalError):
                    gamma_hat = math.nan
                for name in spec.conventions:
                    try:
                        a = _convention_a(name, a_star)
                    except DegenerateConventionError:
                        rows.append(
                            _excluded_row(T, rho, rho_x, rho_y, s0y, name,
                                          "degenerate_convention",
                                          est.value, est.stderr)
                        )
                        continue
                    k_x, k_y, i_x, i_y, price = _price_point(
                        smile_x, smile_y, rho, x, y, T, a
                    )
                    rho_hat = (
                        margrabe.implied_correlation(gamma_hat, i_x, i_y)
                        if np.isfinite(gamma_hat)
                        else math.nan
                    )
                    rows.append(
                        {
                            "T": T, "rho": rho, "rho_X": rho_x, "rho_Y": rho_y,
                            "s0Y": s0y, "convention": name, "a_value": a,
                            "kX": k_x, "kY": k_y, "IX": i_x, "IY": i_y,
                            "margrabe_price": price,
                            "mc_price": est.value, "mc_stderr": est.stderr,
                            "error": price - est.value,
                            "implied_corr": rho_hat,
                            "excluded": False, "exclusion_reason": "",
                        }
                    )
    rows.sort(key=_row_key)
    return rows


def _row_key(row: dict):
    return (
        row["T"], row["rho"], row["rho_X"], row["rho_Y"], row["s0Y"],
        CONVENTIONS.index(row["convention"])
        if row["convention"] in CONVENTIONS
        else len(CONVENTIONS),
    )


def summarize_exclusions(rows: Iterable[dict]) -> ExclusionSummary:
    """Close the accounting from actual sweep rows.

    A grid point counts as excluded when every convention row at it is
    (invalid correlation, sub-cent benchmark); a degenerate a* only loses the
    a_star rows, so those points stay included and are tallied separately.
    """
    reasons: dict[tuple, set[str]] = {}
    for row in rows:
        key = (row["T"], row["rho"], row["rho_X"], row["rho_Y"], row["s0Y"])
        reasons.setdefault(key, set()).add(
            row["exclusion_reason"] if row["excluded"] else ""
        )
    counts = {"": 0, "invalid_correlation": 0, "sub_cent": 0}
    degenerate = 0
    for tags in reasons.values():
        if "degenerate_convention" in tags:
            degenerate += 1
        point_tags = tags - {"degenerate_convention"}
        if point_tags == {"invalid_correlation"}:
            counts["invalid_correlation"] += 1
        elif point_tags == {"sub_cent"}:
            counts["sub_cent"] += 1
        else:
            counts[""] += 1
    # triple counts from the rows themselves so reports recomputed from a CSV
    # stay correct even when the spec in hand differs from the producing run
    triples = {key[1:4] for key in reasons}
    invalid_triples = sum(
        1 for rho, rho_x, rho_y in triples
        if not validate_correlation(
            CorrelationStructure(rho=rho, rho_x=rho_x, rho_y=rho_y)
        )[0]
    )
    return ExclusionSummary(
        total_points=len(reasons),
        included=counts[""],
        invalid_correlation=counts["invalid_correlation"],
        sub_cent=counts["sub_cent"],
        degenerate_convention=degenerate,
        total_triples=len(triples),
        invalid_triples=invalid_triples,
    )


def compute_metrics(
    rows: Iterable[dict],
    group_by: Sequence[str] = ("T", "rho"),
    exclude_extreme_a: bool = False,
    atm_s0y: float = 100.0,
) -> list[ErrorReport]:
    """Per-group, per-convention error metrics over included rows.

    MAE/MAPE/RMSE/MaxAE act on |margrabe - mc|; MStd is the mean over
    (T, rho, rho_X, rho_Y) combinations of the standard deviation of signed
    errors across the moneyness grid; atm_error is the MAE restricted to
    s0Y == atm_s0y.  ``exclude_extreme_a`` drops every grid point whose raw a*
    falls outside [-1, 2] (all conventions, mirroring the reference study's
    exclusion variant).
    """
    rows = [r for r in rows if not r["excluded"]]
    if exclude_extreme_a:
        extreme_keys = {
            (r["T"], r["rho"], r["rho_X"], r["rho_Y"], r["s0Y"])
            for r in rows
            if r["convention"] == "a_star"
            and not conv.A_BOUNDS[0] <= r["a_value"] <= conv.A_BOUNDS[1]
        }
        rows = [
            r for r in rows
            if (r["T"], r["rho"], r["rho_X"], r["rho_Y"], r["s0Y"]) not in extreme_keys
        ]

    groups: dict[tuple, dict[str, list[dict]]] = {}
    conventions: list[str] = []
    for r in rows:
        gkey = tuple(r[k] for k in group_by)
        groups.setdefault(gkey, {}).setdefault(r["convention"], []).append(r)
        if r["convention"] not in conventions:
            conventions.append(r["convention"])

    reports: list[ErrorReport] = []
    for gkey in sorted(groups):
        for name in conventions:
            sel = groups[gkey].get(name, [])
            group = dict(zip(group_by, gkey))
            if not sel:
                reports.append(
                    ErrorReport(group, name, 0, math.nan, math.nan, math.nan,
                                math.nan, math.nan, math.nan)
                )
                continue
            err = np.array([r["error"] for r in sel])
            mc_val = np.array([r["mc_price"] for r in sel])
            abs_err = np.abs(err)
            combos: dict[tuple, list[float]] = {}
            for r in sel:
                ckey = (r["T"], r["rho"], r["rho_X"], r["rho_Y"])
                combos.setdefault(ckey, []).append(r["error"])
            # population std: a single-moneyness combo contributes zero spread
            stds = [float(np.std(v)) for v in combos.values()]
            atm = [abs(r["error"]) for r in sel if r["s0Y"] == atm_s0y]
            reports.append(
                ErrorReport(
                    group=group,
                    convention=name,
                    n_points=len(sel),
                    mae=float(np.mean(abs_err)),
                    mape=float(np.mean(abs_err / mc_val)),
                    rmse=float(np.sqrt(np.mean(err * err))),
                    max_ae=float(np.max(abs_err)),
                    mstd=float(np.mean(stds)) if stds else math.nan,
                    atm_error=float(np.mean(atm)) if atm else math.nan,
                )
            )
    return reports


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    v = float(value)
    if math.isnan(v):
        return ""
    return repr(v)


def results_csv(rows: Iterable[dict]) -> str:
    """Serialize sweep rows with full float precision; byte-stable for a given
    row list."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in RESULT_COLUMNS])
    return buf.getvalue()


def write_results_csv(rows: Iterable[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(results_csv(rows))


def read_results_csv(path) -> list[dict]:
    rows: list[dict] = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            row: dict = {}
            for col in RESULT_COLUMNS:
                raw = rec.get(col, "")
                if col == "convention" or col == "exclusion_reason":
                    row[col] = raw
                elif col == "excluded":
                    row[col] = raw == "true"
                else:
                    row[col] = float(raw) if raw != "" else math.nan
            rows.append(row)
    return rows


def emit_plot_data(result, kind: str) -> str:
    """Tidy plot extracts as CSV text with columns series, x, y.

    kinds: ``skew`` (leg smiles, needs a TestCaseResult), ``implied_corr``,
    ``ratio``, ``difference`` (per-convention curves vs S0^Y) and
    ``moneyness_error`` (mean absolute error vs S0^Y across a row set).
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["series", "x", "y"])

    def rows_of(res):
        return res.rows if isinstance(res, TestCaseResult) else list(res)

    if kind == "skew":
        if not isinstance(result, TestCaseResult):
            raise ValueError("kind='skew' needs a TestCaseResult with smiles")
        for smile in (result.smile_x, result.smile_y):
            for rec in heston.smile_csv_rows(smile):
                writer.writerow(
                    [smile.asset_id, _fmt(rec["strike"]), _fmt(rec["implied_vol"])]
                )
        return buf.getvalue()

    rows = [r for r in rows_of(result) if not r["excluded"]]
    if kind in ("implied_corr", "difference", "ratio"):
        col = {"implied_corr": "implied_corr", "difference": "error", "ratio": "ratio"}[kind]
        for r in rows:
            if col == "ratio" and "ratio" not in r:
                value = (
                    r["margrabe_price"] / r["mc_price"] if r["mc_price"] else math.nan
                )
            else:
                value = r[col]
            writer.writerow([r["convention"], _fmt(r["s0Y"]), _fmt(value)])
        return buf.getvalue()

    if kind == "moneyness_error":
        acc: dict[tuple[str, float], list[float]] = {}
        for r in rows:
            acc.setdefault((r["convention"], r["s0Y"]), []).append(abs(r["error"]))
        for (name, s0y) in sorted(acc, key=lambda k: (k[0], k[1])):
            writer.writerow([name, _fmt(s0y), _fmt(float(np.mean(acc[(name, s0y)])))])
        return buf.getvalue()

    raise ValueError(f"unknown plot kind {kind!r}")


def report_json_payload(
    spec: GridSpec, rows: list[dict], groupings: Sequence[Sequence[str]] = (("T", "rho"), ("T",)),
) -> dict:
    """Metrics per grouping and convention plus exclusion accounting and the
    run configuration (seed and stream layout included), in a
    JSON-serializable layout."""
    def clean(v):
        return None if isinstance(v, float) and math.isnan(v) else v

    payload: dict = {
        "config": {
            "T_list": list(spec.T_list),
            "s0x": spec.s0x,
            "s0y_list": list(spec.s0y_list),
            "lam_x": spec.lam_x,
            "lam_y": spec.lam_y,
            "heston": {
                "kappa": spec.heston.kappa, "theta": spec.heston.theta,
                "nu": spec.heston.nu, "sigma0": spec.heston.sigma0,
            },
            "rho_list": list(spec.rho_list),
            "rho_x_list": list(spec.rho_x_list),
            "rho_y_list": list(spec.rho_y_list),
            "mc": {
                "n_paths": spec.mc.n_paths,
                "n_steps": spec.mc.n_steps,
                "seed": spec.mc.seed,
                "use_control_variate": spec.mc.use_control_variate,
                # per-combination streams: SeedSequence((seed, iT, irho, irx, iry)),
                # then Philox blocks of 4096 paths keyed (stream, block index)
                "stream_derivation": "seedseq(seed, iT, irho, irhoX, irhoY); philox blocks of 4096",
            },
            "conventions": list(spec.conventions),
        },
        "exclusions": summarize_exclusions(rows).__dict__,
    }
    payload["metrics"] = {}
    for group_by in groupings:
        for variant, flag in (("all", False), ("exclude_extreme_a", True)):
            reports = compute_metrics(rows, group_by=tuple(group_by), exclude_extreme_a=flag)
            key = "+".join(group_by) + ":" + variant
            payload["metrics"][key] = [
                {
                    "group": r.group,
                    "convention": r.convention,
                    "n_points": r.n_points,
                    "mae": clean(r.mae),
                    "mape": clean(r.mape),
                    "rmse": clean(r.rmse),
                    "max_ae": clean(r.max_ae),
                    "mstd": clean(r.mstd),
                    "atm_error": clean(r.atm_error),
                }
                for r in reports
            ]
    return payload
