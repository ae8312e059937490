"""Brute-force small-system checks for the closed forms.

States are stored either as a GHZ-diagonal spectrum (two eigenvalues per
pair class {i, i-bar}) or as a dense density matrix.  Qubit 0 is the most
significant bit of a computational basis index; a class is labelled by
its representative whose leading bit is 0.
"""

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .noise_models import DomainError, NoiseParams, ghz_fidelity, no_flip_survival, visibility
from .qfi_core import QfiValue

MAX_SPECTRUM_N = 12
MAX_DENSE_N = 8
EIG_CUTOFF = 1e-15


@dataclass(frozen=True)
class GhzSpectrum:
    """Eigenvalues of (|i> + |i-bar>)/sqrt2 (plus) and (|i> - |i-bar>)/sqrt2 (minus)."""

    n: int
    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n <= MAX_SPECTRUM_N:
            raise DomainError(f"spectrum path supports 1 <= n <= {MAX_SPECTRUM_N}")
        if len(self.plus) != 2 ** (self.n - 1) or len(self.minus) != 2 ** (self.n - 1):
            raise DomainError("spectrum arrays must have 2^(n-1) entries")

    @property
    def total(self):
        return float(np.sum(self.plus) + np.sum(self.minus))

    def string_masses(self):
        """Diagonal of rho in the computational basis (length 2^n)."""
        half = 2 ** (self.n - 1)
        avg = 0.5 * (self.plus + self.minus)
        mass = np.empty(2 * half)
        mass[:half] = avg
        # complement of class c is c XOR (2^n - 1), which lies in the upper half
        mass[(2 * half - 1) ^ np.arange(half)] = avg
        return mass

    def coherences(self):
        """Half the plus/minus splitting, i.e. <i|rho|i-bar> for each class."""
        return 0.5 * (self.plus - self.minus)

    def is_symmetric(self, tol=1e-14):
        """True when string masses depend only on Hamming weight."""
        mass = self.string_masses()
        w = _weights(self.n)
        for h in range(self.n + 1):
            sel = mass[w == h]
            if np.ptp(sel) > tol:
                return False
        return True


def _weights(n):
    idx = np.arange(2**n)
    return np.array([bin(i).count("1") for i in idx])


def _from_masses(n, mass, coh):
    half = 2 ** (n - 1)
    base = mass[:half]
    return GhzSpectrum(n, base + coh, base - coh)


def build_depolarized_ghz(F, k, n):
    """V |GHZ><GHZ| + (1 - V) I / 2^n as a spectrum."""
    NoiseParams(F, k)
    if not 1 <= n <= MAX_SPECTRUM_N or int(n) != n:
        raise DomainError(f"n must be an integer in [1, {MAX_SPECTRUM_N}]")
    n = int(n)
    V = float(visibility(F, k, n))
    floor = (1.0 - V) / 2**n
    plus = np.full(2 ** (n - 1), floor)
    minus = plus.copy()
    plus[0] = V + floor  # equals F(n)
    return GhzSpectrum(n, plus, minus)


def pure_ghz(n):
    return build_depolarized_ghz(1.0, 1.0, n)


# ---------------------------------------------------------------- loss

def lose_qubits_spectrum(spec: GhzSpectrum, lost):
    """Apply one loss pattern: trace out the qubits in ``lost`` and replace each by I/2."""
    n = spec.n
    lost = tuple(sorted(set(lost)))
    if not lost:
        return spec
    t = spec.string_masses().reshape([2] * n)
    marg = t.sum(axis=lost, keepdims=True) / 2 ** len(lost)
    mass = np.broadcast_to(marg, t.shape).reshape(-1)
    return _from_masses(n, mass, np.zeros(2 ** (n - 1)))


def pattern_probabilities(n, p):
    """(pattern, probability) for all 2^n loss patterns."""
    out = []
    for j in range(n + 1):
        for lost in combinations(range(n), j):
            out.append((lost, p ** (n - j) * (1.0 - p) ** j))
    return out


def apply_loss_channel_patterns(spec: GhzSpectrum, p):
    """Loss channel by explicit enumeration of every pattern (auditor path)."""
    n = spec.n
    plus = np.zeros_like(spec.plus)
    minus = np.zeros_like(spec.minus)
    for lost, w in pattern_probabilities(n, p):
        out = lose_qubits_spectrum(spec, lost)
        plus += w * out.plus
        minus += w * out.minus
    return GhzSpectrum(n, plus, minus)


def _symmetric_loss_masses(n, mass_by_weight, p):
    """Output mass per Hamming weight after independent loss of each qubit.

    Averages over patterns with j lost qubits with a hypergeometric split of
    the string's ones between kept and lost positions.
    """
    out = np.zeros(n + 1)
    for j in range(n + 1):
        w_j = comb(n, j) * p ** (n - j) * (1.0 - p) ** j
        if w_j == 0:
            continue
        for h in range(n + 1):
            acc = 0.0
            for ones_lost in range(max(0, h - (n - j)), min(h, j) + 1):
                r = h - ones_lost  # ones on the kept qubits
                prob = comb(h, ones_lost) * comb(n - h, j - ones_lost) / comb(n, j)
                spread = sum(comb(j, u) * mass_by_weight[r + u] for u in range(j + 1)) / 2**j
                acc += prob * spread
            out[h] += w_j * acc
    return out


def apply_loss_channel(spec: GhzSpectrum, p):
    """Loss channel on a spectrum.

    Permutation-symmetric inputs use a sum over the number of lost qubits;
    anything else falls back to per-pattern enumeration.
    """
    if not 0 <= p <= 1:
        raise DomainError("p must lie in [0, 1]")
    if p == 1:
        return spec
    n = spec.n
    if not spec.is_symmetric():
        return apply_loss_channel_patterns(spec, p)
    mass = spec.string_masses()
    w = _weights(n)
    by_w = np.array([mass[w == h][0] for h in range(n + 1)])
    new_by_w = _symmetric_loss_masses(n, by_w, p)
    new_mass = new_by_w[w]
    # coherences survive only if nothing was lost
    return _from_masses(n, new_mass, p**n * spec.coherences())


def post_select_no_loss(spec: GhzSpectrum, p):
    """Keep only the no-loss branch: returns (state, acceptance probability)."""
    return spec, p**spec.n


# ---------------------------------------------------------------- dephasing

def apply_dephasing_channel(spec: GhzSpectrum, q):
    """Independent phase flips; only the parity of the flips matters."""
    if not 0.5 <= q <= 1:
        raise DomainError("q must lie in [1/2, 1]")
    qt = float(no_flip_survival(q, spec.n))
    plus = qt * spec.plus + (1.0 - qt) * spec.minus
    minus = (1.0 - qt) * spec.plus + qt * spec.minus
    return GhzSpectrum(spec.n, plus, minus)


def apply_dephasing_strings(spec: GhzSpectrum, q):
    """Same channel summed over all 2^n Z strings (auditor path)."""
    n = spec.n
    even = sum(comb(n, j) * q ** (n - j) * (1 - q) ** j for j in range(0, n + 1, 2))
    odd = 1.0 - even
    return GhzSpectrum(n, even * spec.plus + odd * spec.minus, odd * spec.plus + even * spec.minus)


# ---------------------------------------------------------------- QFI

def qfi_ghz_diagonal(spec: GhzSpectrum):
    """n^2 sum over classes of (l+ - l-)^2 / (l+ + l-)."""
    s = spec.plus + spec.minus
    d = spec.plus - spec.minus
    ok = s > 0
    v = spec.n**2 * float(np.sum(d[ok] ** 2 / s[ok]))
    return QfiValue.from_value(v, scenario="oracle")


def ghz_basis(n):
    """Columns are the GHZ basis vectors; plus block first, then minus."""
    half = 2 ** (n - 1)
    B = np.zeros((2**n, 2**n))
    r = np.arange(half)
    bar = (2**n - 1) ^ r
    B[r, r] = B[bar, r] = 1 / np.sqrt(2)
    B[r, half + r] = 1 / np.sqrt(2)
    B[bar, half + r] = -1 / np.sqrt(2)
    return B


def density_from_spectrum(spec: GhzSpectrum):
    if spec.n > MAX_DENSE_N:
        raise DomainError(f"dense path supports n <= {MAX_DENSE_N}")
    B = ghz_basis(spec.n)
    lam = np.concatenate([spec.plus, spec.minus])
    return (B * lam) @ B.T


def spectrum_from_density(rho, n):
    """Project a density matrix onto the GHZ basis diagonal."""
    B = ghz_basis(n)
    d = np.real(np.einsum("ij,ik,kj->j", B, rho, B))
    half = 2 ** (n - 1)
    return GhzSpectrum(n, d[:half], d[half:])


def _lose_dense(rho, i, n):
    d = 2**n
    t = rho.reshape([2] * (2 * n))
    red = np.trace(t, axis1=i, axis2=n + i)
    red = np.expand_dims(red, i)
    red = np.expand_dims(red, n + i)
    eye = np.eye(2).reshape([1] * i + [2] + [1] * (n - 1 - i) + [1] * i + [2] + [1] * (n - 1 - i))
    return (red * eye / 2).reshape(d, d)


def _z_dense(rho, i, n):
    z = np.where((np.arange(2**n) >> (n - 1 - i)) & 1, -1.0, 1.0)
    return rho * np.outer(z, z)


def apply_channels_dense(rho, p=1.0, q=1.0):
    """Per-qubit loss (replace by I/2 with probability 1-p), then phase flips."""
    d = rho.shape[0]
    n = int(round(np.log2(d)))
    if n > MAX_DENSE_N:
        raise DomainError(f"dense path supports n <= {MAX_DENSE_N}")
    out = np.array(rho, dtype=complex)
    for i in range(n):
        if p < 1:
            out = p * out + (1 - p) * _lose_dense(out, i, n)
        if q < 1:
            out = q * out + (1 - q) * _z_dense(out, i, n)
    return out


def collective_generator(n):
    """Diagonal of G = (1/2) sum_i Z_i."""
    idx = np.arange(2**n)
    ones = np.array([bin(i).count("1") for i in idx])
    return 0.5 * (n - 2 * ones)


def qfi_sld(rho):
    """Standard SLD QFI for the phase generated by G = (1/2) sum Z_i."""
    d = rho.shape[0]
    n = int(round(np.log2(d)))
    if n > 10:
        raise DomainError("SLD path supports n <= 10")
    lam, U = np.linalg.eigh(rho)
    g = collective_generator(n)
    Gm = (U.conj().T * g) @ U
    ls = lam[:, None] + lam[None, :]
    ld = lam[:, None] - lam[None, :]
    ok = ls > EIG_CUTOFF
    terms = np.zeros_like(ls)
    terms[ok] = ld[ok] ** 2 / ls[ok]
    v = 2.0 * float(np.sum(terms * np.abs(Gm) ** 2))
    return QfiValue.from_value(max(v, 0.0), scenario="oracle-sld")


# ---------------------------------------------------------------- scenarios

def oracle_qfi(scenario, F=1.0, k=1.0, p=1.0, q=1.0, n=2, path="spectrum"):
    """QFI of the physical state for a scenario, built from scratch.

    ``path`` is "spectrum" (GHZ-diagonal formula) or "sld" (dense state and
    full eigendecomposition).  Detected loss keeps only the no-loss branch
    and weights it by its probability.
    """
    from .qfi_core import normalize_scenario, LOSS1, LOSS2, DEPHASING, COMBINED

    scenario = normalize_scenario(scenario)
    spec = build_depolarized_ghz(F, k, n)
    weight = 1.0
    if scenario in (DEPHASING, COMBINED):
        spec = apply_dephasing_channel(spec, q)
    if scenario == LOSS1:
        spec = apply_loss_channel(spec, p)
    if scenario in (LOSS2, COMBINED):
        spec, weight = post_select_no_loss(spec, p)
    if path == "spectrum":
        v = qfi_ghz_diagonal(spec).value
    elif path == "sld":
        v = qfi_sld(density_from_spectrum(spec)).value
    elif path == "dense":
        rho = density_from_spectrum(build_depolarized_ghz(F, k, n))
        if scenario == LOSS1:
            rho = apply_channels_dense(rho, p=p)
        if scenario in (DEPHASING, COMBINED):
            rho = apply_channels_dense(rho, q=q)
        v = qfi_sld(rho).value
    else:
        raise DomainError(f"unknown path {path!r}")
    return QfiValue.from_value(weight * v, scenario=scenario)


def ramsey_p0_dense(F, k, n, omega, gamma, t):
    """P0 of the Ramsey cycle from a dense state at small n.

    The depolarized GHZ state is rotated by exp(-i omega t G), dephased per
    qubit with no-flip probability (1 + exp(-gamma t))/2, and read out
    through the parity <X...X>.  The readout imperfection enters as the
    contrast factor F k^(n-1), matching the analytic model.
    """
    rho = density_from_spectrum(build_depolarized_ghz(F, k, n))
    ph = np.exp(-1j * omega * t * collective_generator(n))
    rho = ph[:, None] * rho * np.conj(ph)[None, :]
    rho = apply_channels_dense(rho, q=(1 + np.exp(-gamma * t)) / 2)
    flip = np.arange(2**n) ^ (2**n - 1)
    parity = float(np.real(np.sum(rho[flip, np.arange(2**n)])))
    return 0.5 + 0.5 * F * k ** (n - 1) * parity
