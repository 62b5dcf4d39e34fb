"""
BL-6: d=4 key distribution protocol loop.

Each round Alice and Bob pick a polarization basis (Z or X) and one of two
long-arm phases, detect their photon, and keep the round when both clicks
fall in the central slot. Sifting keeps rounds where both choices match, so
every sifted round yields one 2-bit symbol. The single-channel baseline runs
the same loop on polarization alone.

Rounds are simulated in batches; batch k draws from RngStream(seed).child(k)
and batches are assembled in index order, so a seed fixes the transcript.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from pkg.errors import DomainError
from pkg.models.qkd import (
    ChannelReport,
    Dof,
    DoubleEntangledState,
    EveKind,
    EveStrategy,
    ObserverPolicy,
    PolBasis,
    ProtocolRun,
    RoundRecord,
    TimeSlot,
)
from pkg.montecarlo.information import contingency, mutual_information, mutual_information_stderr
from pkg.montecarlo.rng import RngStream, categorical
from pkg.montecarlo.tally import Tally, merge_all
from pkg.qkd.states import (
    SLOT_JOINT,
    SLOT_SINGLE,
    intercept_table,
    pair_table,
    phase_basis,
    phase_pair,
    pol_basis,
    pol_pair,
)

logger = logging.getLogger(__name__)

BATCH_ROUNDS = 50_000
_POL_ORDER = (PolBasis.Z, PolBasis.X, PolBasis.BREIDBART)
_SLOTS = (TimeSlot.EARLY, TimeSlot.CENTRAL, TimeSlot.LATE)
# Eve's basis index for the intermediate basis in both sectors
_BREIDBART_INDEX = 2


class _Sector:
    """Probability tables of one degree of freedom."""

    def __init__(self, psi: np.ndarray, alice: list[np.ndarray], bob: list[np.ndarray], eve: list[np.ndarray]):
        self.plain = pair_table(psi, alice, bob)  # [ia, ib, a, b]
        self.attacked = intercept_table(psi, alice, eve, bob)  # [ia, ie, ib, a, e, b]

    def sample(
        self,
        stream: RngStream,
        ia: np.ndarray,
        ib: np.ndarray,
        ie: np.ndarray,
        attacked: np.ndarray,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(alice, eve, bob) outcomes; eve is -1 where the round was not attacked."""
        n = ia.size
        rows = np.zeros((n, 2, 2, 2))
        clean = ~attacked
        rows[clean, :, 0, :] = self.plain[ia[clean], ib[clean]]
        rows[attacked] = self.attacked[ia[attacked], ie[attacked], ib[attacked]]
        idx = categorical(stream, rows.reshape(n, 8))
        a, e, b = idx // 4, (idx // 2) % 2, idx % 2
        return a, np.where(attacked, e, -1), b

    def posterior(self, ia: np.ndarray, ie: np.ndarray, e: np.ndarray, attacked: np.ndarray) -> np.ndarray:
        """Eve's posterior over Alice's bit in sifted rounds (Bob's basis equals Alice's)."""
        n = ia.size
        post = self.plain[ia, ia].sum(axis=2)  # Alice marginal, shape (n, 2)
        if np.any(attacked):
            k = np.flatnonzero(attacked)
            joint = self.attacked[ia[k], ie[k], ia[k]].sum(axis=3)  # [a, e]
            post[k] = joint[np.arange(k.size), :, e[k]]
        total = post.sum(axis=1, keepdims=True)
        return np.divide(post, total, out=np.full((n, 2), 0.5), where=total > 0.0)


def _choices(stream: RngStream, n: int, p_first: float) -> np.ndarray:
    return (stream.uniform(n) >= p_first).astype(np.int64)


def _eve_bases(stream: RngStream, eve: EveStrategy, n: int, dof: Dof) -> np.ndarray:
    if not eve.which_dofs.covers(dof):
        return np.full(n, -1, dtype=np.int64)
    if eve.kind is EveKind.BREIDBART:
        return np.full(n, _BREIDBART_INDEX, dtype=np.int64)
    return stream.generator.integers(0, 2, n)


def _phase_settings(policy: ObserverPolicy, default: tuple[float, float]) -> tuple[float, float]:
    return policy.phase_settings if policy.phase_settings is not None else default


def _margins(pol_post: np.ndarray, phase_post: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    """Top-minus-runner-up posterior mass and the MAP symbol."""
    if phase_post is None:
        full = pol_post
    else:
        full = (pol_post[:, :, None] * phase_post[:, None, :]).reshape(-1, 4)
    ordered = np.sort(full, axis=1)
    return ordered[:, -1] - ordered[:, -2], np.argmax(full, axis=1)


class _Accumulator:
    """Sifted-round arrays and error tallies gathered batch by batch."""

    def __init__(self) -> None:
        self.n_postselected = 0
        self.alice: list[np.ndarray] = []
        self.bob: list[np.ndarray] = []
        self.records: list[np.ndarray] = []
        self.margins: list[np.ndarray] = []
        self.guesses: list[np.ndarray] = []
        self.bit_errors: list[Tally] = []
        self.pol_errors: list[Tally] = []
        self.phase_errors: list[Tally] = []
        self.symbol_errors: list[Tally] = []
        self.transcript: list[RoundRecord] = []

    def concat(self, name: str, dtype: type = np.int64) -> np.ndarray:
        parts = getattr(self, name)
        return np.concatenate(parts) if parts else np.empty(0, dtype=dtype)


def _report(
    acc: _Accumulator,
    channel: str,
    eve: EveStrategy,
    n_rounds: int,
    bits: int,
) -> ChannelReport:
    alice = acc.concat("alice")
    n_sifted = int(alice.size)
    base = ChannelReport(
        channel=channel,
        eve_kind=eve.kind,
        intercept_fraction=eve.intercept_fraction if eve.kind is not EveKind.NONE else 0.0,
        bits_per_symbol=bits,
        n_rounds=n_rounds,
        n_postselected=acc.n_postselected,
        n_sifted=n_sifted,
        sifted_rate=n_sifted / acc.n_postselected if acc.n_postselected else 0.0,
    )
    if n_sifted == 0:
        logger.warning("%s channel: no sifted rounds out of %d", channel, n_rounds)
        return base.model_copy(update={"empty_sifted": True})

    records = np.concatenate(acc.records, axis=0)
    _, record_ids = np.unique(records, axis=0, return_inverse=True)
    table = contingency(alice, record_ids.ravel())
    mi = mutual_information(table)
    mi_err = mutual_information_stderr(table)

    bit_t = merge_all(acc.bit_errors)
    sym_t = merge_all(acc.symbol_errors)
    margin_t = Tally.of(acc.concat("margins", float))
    guesses = acc.concat("guesses")
    guess_t = Tally.of_counts(int(np.sum(guesses == alice)), n_sifted)
    pol_t = merge_all(acc.pol_errors)
    phase_t = merge_all(acc.phase_errors)
    return base.model_copy(update={
        "qber": bit_t.mean,
        "qber_stderr": bit_t.stderr,
        "qber_pol": pol_t.mean,
        "qber_phase": phase_t.mean if bits == 2 else None,
        "symbol_error_rate": sym_t.mean,
        "symbol_error_stderr": sym_t.stderr,
        "I_AE_mutual": mi,
        "I_AE_mutual_stderr": mi_err,
        "I_AE_per_bit": mi / bits,
        "P_full_symbol": margin_t.mean,
        "P_full_symbol_stderr": margin_t.stderr,
        "eve_guess_rate": guess_t.mean,
        "eve_guess_stderr": guess_t.stderr,
    })


def _check_rounds(n_rounds: int) -> None:
    if n_rounds < 1:
        raise DomainError(f"need at least one round, got {n_rounds}")


def _batches(n_rounds: int, batch_rounds: int) -> list[tuple[int, int]]:
    return [(start, min(batch_rounds, n_rounds - start)) for start in range(0, n_rounds, batch_rounds)]


def _opt(v: int) -> int | None:
    return None if v < 0 else int(v)


def run_protocol(
    state: DoubleEntangledState,
    n_rounds: int,
    alice_policy: ObserverPolicy | None = None,
    bob_policy: ObserverPolicy | None = None,
    eve: EveStrategy | None = None,
    seed: int = 0,
    *,
    transcript: bool = False,
    batch_rounds: int = BATCH_ROUNDS,
) -> ProtocolRun:
    """Simulate the double-entangled channel and sift a symbol key."""
    _check_rounds(n_rounds)
    alice_policy = alice_policy or ObserverPolicy()
    bob_policy = bob_policy or ObserverPolicy()
    eve = eve or EveStrategy()

    alpha = _phase_settings(alice_policy, (0.0, 0.5 * math.pi))
    beta = _phase_settings(bob_policy, (state.phi - alpha[0], state.phi - alpha[1]))
    pol_a = [pol_basis(b) for b in _POL_ORDER[:2]]
    pol = _Sector(pol_pair(state.f_pol.value), pol_a, pol_a, [pol_basis(b) for b in _POL_ORDER])
    phase_b = [phase_basis(b) for b in beta]
    phase = _Sector(
        phase_pair(state.pump),
        [phase_basis(a) for a in alpha],
        phase_b,
        [*phase_b, phase_basis(0.5 * (beta[0] + beta[1]))],
    )
    slot_joint = SLOT_JOINT.ravel()
    slot_indep = np.outer(SLOT_SINGLE, SLOT_SINGLE).ravel()

    root = RngStream(seed)
    acc = _Accumulator()
    for k, (start, n) in enumerate(_batches(n_rounds, batch_rounds)):
        s = root.child(k)
        ia_p = _choices(s, n, alice_policy.z_probability)
        ib_p = _choices(s, n, bob_policy.z_probability)
        ia_x = _choices(s, n, alice_policy.first_phase_probability)
        ib_x = _choices(s, n, bob_policy.first_phase_probability)
        hit = s.uniform(n) < eve.intercept_fraction if eve.active else np.zeros(n, dtype=bool)
        ie_p = _eve_bases(s, eve, n, Dof.POLARIZATION)
        ie_x = _eve_bases(s, eve, n, Dof.PHASE)
        att_p = hit & (ie_p >= 0)
        att_x = hit & (ie_x >= 0)

        # a resent time-bin qubit no longer shares its emission time with Alice's photon
        slot_rows = np.where(att_x[:, None], slot_indep[None, :], slot_joint[None, :])
        slot_idx = categorical(s, slot_rows)
        slot_a, slot_b = slot_idx // 3, slot_idx % 3

        a_p, e_p, b_p = pol.sample(s, ia_p, ib_p, ie_p, att_p)
        a_x, e_x, b_x = phase.sample(s, ia_x, ib_x, ie_x, att_x)

        post = (slot_a == 1) & (slot_b == 1)
        sifted = post & (ia_p == ib_p) & (ia_x == ib_x)
        acc.n_postselected += int(post.sum())

        idx = np.flatnonzero(sifted)
        sym_a = 2 * a_p[idx] + a_x[idx]
        sym_b = 2 * b_p[idx] + b_x[idx]
        err_p = a_p[idx] != b_p[idx]
        err_x = a_x[idx] != b_x[idx]
        margin, guess = _margins(
            pol.posterior(ia_p[idx], ie_p[idx], e_p[idx], att_p[idx]),
            phase.posterior(ia_x[idx], ie_x[idx], e_x[idx], att_x[idx]),
        )
        acc.alice.append(sym_a)
        acc.bob.append(sym_b)
        acc.records.append(np.column_stack([
            att_p[idx], att_x[idx], ia_p[idx], ia_x[idx],
            np.where(att_p[idx], ie_p[idx], -1), np.where(att_x[idx], ie_x[idx], -1), e_p[idx], e_x[idx],
        ]).astype(np.int64))
        acc.margins.append(margin)
        acc.guesses.append(guess)
        acc.bit_errors.append(Tally.of(np.concatenate([err_p, err_x]).astype(float)))
        acc.pol_errors.append(Tally.of(err_p.astype(float)))
        acc.phase_errors.append(Tally.of(err_x.astype(float)))
        acc.symbol_errors.append(Tally.of_counts(int(np.sum(err_p | err_x)), idx.size))

        if transcript:
            for r in range(n):
                acc.transcript.append(RoundRecord(
                    round=start + r,
                    alice_pol_basis=_POL_ORDER[ia_p[r]].value,
                    bob_pol_basis=_POL_ORDER[ib_p[r]].value,
                    alice_phase_index=int(ia_x[r]),
                    bob_phase_index=int(ib_x[r]),
                    alice_slot=_SLOTS[slot_a[r]].value,
                    bob_slot=_SLOTS[slot_b[r]].value,
                    alice_pol=int(a_p[r]),
                    bob_pol=int(b_p[r]),
                    alice_phase=int(a_x[r]) if slot_a[r] == 1 else None,
                    bob_phase=int(b_x[r]) if slot_b[r] == 1 else None,
                    eve_intercepted=bool(hit[r]),
                    eve_pol_basis=_POL_ORDER[ie_p[r]].value if att_p[r] else None,
                    eve_phase_index=int(ie_x[r]) if att_x[r] else None,
                    eve_pol=_opt(e_p[r]),
                    eve_phase=_opt(e_x[r]),
                    sifted=bool(sifted[r]),
                ))
        logger.debug("double channel batch %d: %d rounds, %d sifted", k, n, idx.size)

    report = _report(acc, "double", eve, n_rounds, bits=2)
    logger.info(
        "double channel: %d rounds, %d sifted, qber=%.4g, I_AE=%.4g bit/symbol",
        n_rounds, report.n_sifted, report.qber, report.I_AE_mutual,
    )
    return ProtocolRun(
        report=report,
        alice_key=acc.concat("alice").tolist(),
        bob_key=acc.concat("bob").tolist(),
        transcript=acc.transcript if transcript else None,
    )


def run_single_channel(
    n_rounds: int,
    eve: EveStrategy | None = None,
    seed: int = 0,
    *,
    f_pol: complex = 1.0,
    alice_policy: ObserverPolicy | None = None,
    bob_policy: ObserverPolicy | None = None,
    transcript: bool = False,
    batch_rounds: int = BATCH_ROUNDS,
) -> ProtocolRun:
    """Polarization-only BB84-style channel; Eve attacks polarization whatever her which_dofs."""
    _check_rounds(n_rounds)
    alice_policy = alice_policy or ObserverPolicy()
    bob_policy = bob_policy or ObserverPolicy()
    eve = eve or EveStrategy()
    eve_pol = eve.model_copy(update={"which_dofs": Dof.POLARIZATION})

    bases = [pol_basis(b) for b in _POL_ORDER[:2]]
    pol = _Sector(pol_pair(complex(f_pol)), bases, bases, [pol_basis(b) for b in _POL_ORDER])

    root = RngStream(seed)
    acc = _Accumulator()
    for k, (start, n) in enumerate(_batches(n_rounds, batch_rounds)):
        s = root.child(k)
        ia = _choices(s, n, alice_policy.z_probability)
        ib = _choices(s, n, bob_policy.z_probability)
        hit = s.uniform(n) < eve.intercept_fraction if eve.active else np.zeros(n, dtype=bool)
        ie = _eve_bases(s, eve_pol, n, Dof.POLARIZATION)
        a, e, b = pol.sample(s, ia, ib, ie, hit)

        sifted = ia == ib
        acc.n_postselected += n
        idx = np.flatnonzero(sifted)
        err = a[idx] != b[idx]
        margin, guess = _margins(pol.posterior(ia[idx], ie[idx], e[idx], hit[idx]), None)
        acc.alice.append(a[idx])
        acc.bob.append(b[idx])
        acc.records.append(np.column_stack([
            hit[idx], ia[idx], np.where(hit[idx], ie[idx], -1), e[idx],
        ]).astype(np.int64))
        acc.margins.append(margin)
        acc.guesses.append(guess)
        t = Tally.of_counts(int(err.sum()), idx.size)
        acc.bit_errors.append(t)
        acc.pol_errors.append(t)
        acc.symbol_errors.append(t)

        if transcript:
            for r in range(n):
                acc.transcript.append(RoundRecord(
                    round=start + r,
                    alice_pol_basis=_POL_ORDER[ia[r]].value,
                    bob_pol_basis=_POL_ORDER[ib[r]].value,
                    alice_pol=int(a[r]),
                    bob_pol=int(b[r]),
                    eve_intercepted=bool(hit[r]),
                    eve_pol_basis=_POL_ORDER[ie[r]].value if hit[r] else None,
                    eve_pol=_opt(e[r]),
                    sifted=bool(sifted[r]),
                ))

    report = _report(acc, "single", eve, n_rounds, bits=1)
    logger.info("single channel: %d rounds, %d sifted, qber=%.4g", n_rounds, report.n_sifted, report.qber)
    return ProtocolRun(
        report=report,
        alice_key=acc.concat("alice").tolist(),
        bob_key=acc.concat("bob").tolist(),
        transcript=acc.transcript if transcript else None,
    )


def single_channel_baseline(n_rounds: int, eve: EveStrategy | None = None, seed: int = 0) -> ChannelReport:
    """Report of the polarization-only channel."""
    return run_single_channel(n_rounds, eve, seed).report


def eve_sweep(
    state: DoubleEntangledState,
    intercept_fractions: list[float],
    eve: EveStrategy,
    n_rounds: int,
    seed: int = 0,
    *,
    single: bool = False,
    alice_policy: ObserverPolicy | None = None,
    bob_policy: ObserverPolicy | None = None,
) -> list[ChannelReport]:
    """One report per intercept fraction; every point reuses the seed."""
    if not intercept_fractions:
        raise DomainError("intercept fraction list is empty")
    reports: list[ChannelReport] = []
    for eta_e in intercept_fractions:
        attack = eve.with_fraction(eta_e)
        if single:
            run = run_single_channel(
                n_rounds, attack, seed, f_pol=state.f_pol.value, alice_policy=alice_policy, bob_policy=bob_policy,
            )
        else:
            run = run_protocol(state, n_rounds, alice_policy, bob_policy, attack, seed)
        reports.append(run.report)
    return reports
