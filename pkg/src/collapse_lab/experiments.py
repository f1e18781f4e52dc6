"""Experiment runners: each turns a parameter dataclass into an ExperimentReport."""
from __future__ import annotations

import time

import numpy as np

from . import attractor as att
from . import chain as ch
from . import coherent as co
from . import retention as ret
from .config import ExperimentConfig
from .hilbert import density
from .report import ExperimentReport

WINDOW_MARGIN = 4.0
WINDOW_WIDTHS = (0.5, 1.0, 2.0, 4.0)


def run_chain(p, rng, scale=1.0) -> ExperimentReport:
    rep = ExperimentReport("chain", inputs=vars(p).copy())
    rep.columns = ["level", "outcome", "probability", "expected"]
    spec = ch.ChainSpec(p.levels, p.a, p.b)
    expected = {"1": abs(p.a) ** 2, "2": abs(p.b) ** 2}
    worst = 0.0
    for j in ch.OUTCOME_TAGS:
        probs = [ch.chain_outcome_probability(spec, n, j).probability for n in range(1, p.levels + 1)]
        for n, pr in enumerate(probs, start=1):
            rep.rows.append([n, int(j), pr, expected[j]])
        rep.quantity(f"P(j={j})", probs[0], "chain-outcome-probability")
        rep.check_le(f"level spread of P(j={j})", "level-independence", max(probs) - min(probs), 1e-12 * scale)
        worst = max(worst, max(abs(x - expected[j]) for x in probs))
    rep.check_le("P(n, j) vs |a|^2 d1j + |b|^2 d2j", "chain-outcome-probability", worst, 1e-12 * scale)

    batch = 0.0
    for _ in range(p.trials):
        z = rng.normal(size=2) + 1j * rng.normal(size=2)
        z /= np.linalg.norm(z)
        s = ch.ChainSpec(p.levels, complex(z[0]), complex(z[1]))
        for j, want in (("1", abs(z[0]) ** 2), ("2", abs(z[1]) ** 2)):
            for n in range(1, p.levels + 1):
                batch = max(batch, abs(ch.chain_outcome_probability(s, n, j).probability - want))
    rep.check_le(f"random batch of {p.trials} specs, max deviation", "chain-outcome-probability", batch, 1e-12 * scale)
    return rep


def run_observers(p, rng, scale=1.0) -> ExperimentReport:
    rep = ExperimentReport("observers", inputs=vars(p).copy())
    rep.columns = ["tag_a", "tag_b", "probability"]
    spec = ch.TwoObserverSpec(p.a, p.b, p.e, p.f, p.g, p.h, p.p, p.q, p.r, p.s)
    psi = ch.build_two_observer_state(spec)
    collapsed, prob = ch.observer_a_collapse(psi, p.tag)
    coeff = {"1x": p.e, "1y": p.f, "2u": p.p, "2v": p.q}[p.tag]
    branch = p.a if p.tag[0] == "1" else p.b
    expected = abs(branch) ** 2 * abs(coeff) ** 2
    rep.quantity(f"P({p.tag})", prob, "collapse-probability")
    rep.check_le(f"P({p.tag}) vs |branch|^2 |brain|^2", "collapse-probability", abs(prob - expected), 1e-12 * scale)

    if p.tag == "1x":
        target = ch.expected_collapsed_state(spec)
        off_support = np.linalg.norm(collapsed.amplitudes[np.abs(target.amplitudes) == 0])
        rep.check_le("amplitude outside closed-form support", "post-collapse-state", off_support, 1e-12 * scale)
        rep.check_le("1 - |<closed form|collapsed>|", "post-collapse-state",
                     abs(1 - abs(target.inner(collapsed))), 1e-12 * scale)
    verdict = ch.agreement_check(collapsed)
    rep.quantity("agreement", verdict, "intersubjective-agreement")
    rep.check_true(f"agreement_check == {p.tag[0]}", "intersubjective-agreement", verdict == int(p.tag[0]))

    seq = ch.sequence_probabilities(spec)
    for (ta, tb), pr in seq.items():
        rep.rows.append([ta, tb, pr])
    consistent = sum(pr for (ta, tb), pr in seq.items() if ta[0] == tb[0])
    rep.quantity("sum over consistent outcome pairs", consistent, "completeness")
    rep.check_le("|1 - sum of consistent pair probabilities|", "completeness", abs(1 - consistent), 1e-12 * scale)

    worst = ch.prior_event_equivalence(spec).discrepancy
    for _ in range(p.trials):
        worst = max(worst, ch.prior_event_equivalence(ch.TwoObserverSpec.random(rng)).discrepancy)
    rep.quantity("max prior-event discrepancy", worst, "prior-event-equivalence")
    rep.check_le(f"one-step vs two-step over {p.trials} random specs", "prior-event-equivalence", worst, 1e-12 * scale)
    return rep


def window_test_states(position: co.PositionGrid, phase: co.PhaseGrid):
    """Packets with centres |q|, |p| <= Q - 4 and widths in [0.5, 4] that fit on ``position``."""
    c = phase.extent - WINDOW_MARGIN
    centres = [(q, pp) for q in (-c, 0.0, c) for pp in (-c, 0.0, c)]
    out = []
    for sigma in WINDOW_WIDTHS:
        for q, pp in centres:
            if abs(q) + co.SUPPORT_WIDTHS * sigma <= position.extent:
                out.append(((q, pp, sigma), co.gaussian_wavepacket(q, pp, sigma, position)))
    return out


def run_coherent(p, rng, scale=1.0) -> ExperimentReport:
    rep = ExperimentReport("coherent", inputs=vars(p).copy())
    rep.columns = ["study", "parameter", "value"]
    pos = co.PositionGrid(p.extent, p.n_points)
    phase = co.PhaseGrid(p.phase_extent, p.n_per_axis)
    fam = co.CoherentFamily.build(pos, phase)

    sample = [(q, pp) for q in np.linspace(-2, 2, 5) for pp in np.linspace(-2, 2, 5)]
    zero = co.coherent_state(0.0, 0.0, pos)
    norm_err = max(abs(co.coherent_state(q, pp, pos).norm() ** 2 - 1) for q, pp in sample)
    ov_err = max(abs(abs(zero.inner(co.coherent_state(q, pp, pos))) ** 2 - co.overlap_modulus_sq((0, 0), (q, pp)))
                 for q, pp in sample)
    rep.check_le("quadrature norm of coherent states", "coherent-normalization", norm_err, 1e-12 * scale)
    rep.check_le("|<0|z>|^2 vs exp(-(q^2+p^2)/2), 5x5 sample", "coherent-overlap", ov_err, 1e-6 * scale)

    h0 = np.abs(fam.amplitudes(zero)) ** 2
    rep.quantity("sum_z w |<0|z>|^2", float(np.sum(fam.weights * h0)), "resolution-of-identity")
    rep.check_le("|1 - sum_z w |<0|z>|^2|", "resolution-of-identity", abs(1 - np.sum(fam.weights * h0)), 1e-4 * scale)

    origin = co.identity_resolution_residual(fam, [zero])
    rep.quantity("residual, coherent state at origin", origin, "resolution-of-identity")
    rep.check_le("residual, coherent state at origin", "resolution-of-identity", origin, 1e-3 * scale)
    window = window_test_states(pos, phase)
    residuals = [co.identity_resolution_residual(fam, [v]) for _, v in window]
    for (q, pp, sigma), r in zip((k for k, _ in window), residuals):
        rep.rows.append(["residual_window", f"q={q:g},p={pp:g},sigma={sigma:g}", r])
    rep.check_le("residual over in-window packets", "resolution-of-identity", max(residuals), 1e-3 * scale)

    states = [zero] + [v for _, v in window]
    grid = phase
    seq = []
    for _ in range(p.refinements + 1):
        f = fam if grid == phase else co.CoherentFamily.build(pos, grid)
        seq.append([co.identity_resolution_residual(f, [v]) for v in states])
        rep.rows.append(["residual_refinement", grid.n_per_axis, max(seq[-1])])
        grid = grid.refined()
    seq = np.array(seq)
    rep.check_true("residual strictly decreasing under refinement", "resolution-of-identity",
                   bool(np.all(np.diff(seq, axis=0) < 0)))

    rho0 = density(zero)
    grained0 = co.coarse_grain(rho0, fam)
    rep.check_le("|Tr rho' - Tr rho|, coherent input", "trace-preservation",
                 abs(np.trace(grained0.matrix) - 1), 1e-5 * scale)
    min_eig = np.linalg.eigvalsh(grained0.matrix).min()
    rep.check_le("-min eigenvalue of rho'", "positivity", -min_eig, 1e-10 * scale)
    purity = float(np.real(np.trace(grained0.matrix @ grained0.matrix)))
    fidelity = float(np.real(zero.amplitudes.conj() @ grained0.matrix @ zero.amplitudes))
    rep.quantity("purity of coarse-grained ground state", purity, "coarse-grained-purity")
    rep.quantity("<0|rho'|0> for rho = |0><0|", fidelity, "degradation-factor")
    rep.check_le("|purity - 1/3|", "coarse-grained-purity", abs(purity - 1 / 3), 2e-2 * scale)

    wpos = co.PositionGrid(p.wide_extent, p.wide_points)
    wphase = co.PhaseGrid(p.wide_phase_extent, p.wide_per_axis)
    wfam = co.CoherentFamily.build(wpos, wphase)
    wide = density(co.gaussian_wavepacket(0.0, 0.0, p.wide_width, wpos))
    rep.check_le(f"|Tr rho' - Tr rho|, width-{p.wide_width:g} packet", "trace-preservation",
                 abs(np.trace(co.coarse_grain(wide, wfam).matrix) - 1), 1e-5 * scale)

    errors = []
    for sigma in p.widths:
        rho = density(co.gaussian_wavepacket(0.0, 0.0, sigma, wpos))
        e = co.husimi_equivalence_error(rho, wfam)
        errors.append(e)
        rep.rows.append(["husimi_error", sigma, e])
    rep.quantity("Husimi diagonal error by width", dict(zip(map(str, p.widths), errors)), "husimi-equivalence")
    order = np.argsort(p.widths)
    rep.check_true("Husimi error decreasing in width", "husimi-equivalence",
                   bool(np.all(np.diff(np.array(errors)[order]) < 0)))
    return rep


def run_survival(p, rng, scale=1.0) -> ExperimentReport:
    rep = ExperimentReport("survival", inputs=vars(p).copy())
    rep.columns = ["q1", "p1", "q2", "p2", "re_direct", "im_direct", "re_grained", "im_grained",
                   "ratio_grained", "ratio_control"]
    pos = co.PositionGrid(p.extent, p.n_points)
    phase = co.PhaseGrid(p.phase_extent, p.n_per_axis)
    fam = co.CoherentFamily.build(pos, phase)

    factor = att.degradation_factor(fam)
    finer = att.degradation_factor(co.CoherentFamily.build(pos, phase.refined()))
    zero = co.coherent_state(0.0, 0.0, pos)
    mass = float(np.sum(fam.weights * np.abs(fam.amplitudes(zero)) ** 2))
    rep.quantity("degradation_factor", factor, "degradation-factor")
    rep.quantity("sum_z w |<0|z>|^2", mass, "resolution-of-identity")
    rep.check_true("0 < degradation factor < 1", "degradation-bound", 0 < factor < 1)
    rep.check_true("degradation factor < sum_z w |<0|z>|^2", "degradation-bound", factor < mass)
    rep.check_le("|degradation factor - 1/2|", "degradation-factor", abs(factor - 0.5), 1e-4 * scale)
    rep.check_le("change under phase-grid refinement", "degradation-factor", abs(finer - factor), 1e-5 * scale)

    evo = att.AttractorEvolution(zero, p.rate)
    fixed = max(np.linalg.norm(evo.operator_at(t) @ zero.amplitudes - zero.amplitudes) for t in (0, 1, 10, 100))
    rep.check_le("|V(t)|0> - |0>|", "attractor-fixed-point", fixed, 1e-12 * scale)
    semi = max(np.max(np.abs(evo.operator_at(t) @ evo.operator_at(s) - evo.operator_at(t + s)))
               for t, s in ((0.5, 1.5), (1.0, 3.0), (2.0, 7.0)))
    rep.check_le("|V(t)V(s) - V(t+s)|_max", "attractor-semigroup", semi, 1e-12 * scale)
    ortho = co.coherent_state(1.5, -0.5, pos).amplitudes
    ortho = ortho - zero.amplitudes * np.vdot(zero.amplitudes, ortho)
    ortho /= np.linalg.norm(ortho)
    decay = max(abs(np.linalg.norm(evo.operator_at(t) @ ortho) - np.exp(-p.rate * t)) for t in (0.5, 1, 2, 5))
    rep.check_le("| |V(t) v_perp| - exp(-rate t) |", "attractor-dissipation", decay, 1e-10 * scale)

    samples = att.default_sample_points(p.sample_extent, p.sample_points)
    s = att.survival_experiment(density(zero), fam, p.time, p.rate, samples, tol=1e-3 * scale)
    k = 0
    for i, z1 in enumerate(samples):
        for j, z2 in enumerate(samples):
            rep.rows.append([z1[0], z1[1], z2[0], z2[1],
                             float(s.direct[i, j].real), float(s.direct[i, j].imag),
                             float(s.grained[i, j].real), float(s.grained[i, j].imag),
                             float(s.ratio_grained[i, j].real) if s.mask[i, j] else "",
                             float(s.ratio_control[i, j].real) if s.mask[i, j] else ""])
            k += 1
    i0 = samples.index((0.0, 0.0)) if (0.0, 0.0) in samples else None
    if i0 is not None:
        rep.quantity("M_grained/M_direct at (0, 0)", s.ratio_grained[i0, i0], "survival-ratio")
    rep.check_le("max |ratio - factor| / factor", "survival-ratio", s.max_relative_error, 1e-3 * scale)
    rep.check_true("control ratio exactly 1", "survival-ratio", bool(np.all(s.ratio_control[s.mask] == 1.0)))
    return rep


def run_retention(p, rng, scale=1.0) -> ExperimentReport:
    rep = ExperimentReport("retention", inputs=vars(p).copy())
    rep.columns = list(ret.SWEEP_COLUMNS)
    spec = ret.RetentionSpec(p.a, p.b, p.c, p.d)
    pure, mixed = ret.retention_identity(spec)
    want = ret.retention_value(spec)
    rep.quantity("Tr P rho", pure, "retention-identity")
    rep.quantity("Tr P rho'", mixed, "retention-identity")
    rep.check_le("|Tr P rho - Tr P rho'|", "retention-identity", abs(pure - mixed), 1e-12 * scale)
    rep.check_le("|Tr P rho - (|a|^2|c|^2 + |b|^2|d|^2)|", "retention-identity", abs(pure - want), 1e-12 * scale)

    worst = 0.0
    for _ in range(p.trials):
        s = ret.RetentionSpec.random(rng)
        x, y = ret.retention_identity(s)
        v = ret.retention_value(s)
        worst = max(worst, abs(x - y), abs(x - v), abs(y - v))
    rep.check_le(f"identity over {p.trials} random specs", "retention-identity", worst, 1e-12 * scale)

    rows = ret.sensitivity_sweep(ret.sweep_grid(p.sweep), a_sq=abs(p.a) ** 2)
    for r in rows:
        rep.rows.append([getattr(r, c) for c in ret.SWEEP_COLUMNS])
    half = ret.sensitivity(1 / np.sqrt(2))
    rep.quantity("S(1/sqrt 2)", half, "information-sensitivity")
    rep.check_le("|S(1/sqrt 2)|", "information-sensitivity", abs(half), 1e-12 * scale)
    mags = np.abs([r.sensitivity for r in rows])
    cs = np.array([r.c for r in rows])
    rep.check_true("|S| maximal at c in {0, 1}", "information-sensitivity",
                   set(cs[mags == mags.max()]) <= {0.0, 1.0})
    fd = max(abs(r.sensitivity - r.sensitivity_fd) for r in rows)
    rep.check_le("finite-difference vs analytic S", "information-sensitivity", fd, 1e-8 * scale)
    return rep


RUNNERS = {
    "chain": run_chain,
    "observers": run_observers,
    "coherent": run_coherent,
    "survival": run_survival,
    "retention": run_retention,
}


def run(config: ExperimentConfig) -> ExperimentReport:
    """Run one experiment. The RNG is seeded from ``config.seed`` for reproducibility."""
    rng = np.random.default_rng(config.seed)
    t0 = time.perf_counter()
    rep = RUNNERS[config.experiment](config.parameters, rng, config.tolerance_scale)
    rep.inputs = dict(rep.inputs, seed=config.seed, tolerance_scale=config.tolerance_scale)
    if config.timing:
        rep.duration_s = time.perf_counter() - t0
    return rep
