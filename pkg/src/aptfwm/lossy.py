"""Lossy propagation of means and second moments.

With probe loss the equation of motion for ``v = (a_p, a_s^dagger)`` becomes

    i dv/dz = M v + i N_R (f_p, f_s^dagger) + i N_I (f_p^dagger, f_s),
    M = [[-dk/2 - i alpha, -kappa], [kappa, dk/2]],
    N_R + i N_I = sqrt(2 [[Re alpha, Im kappa], [-Im kappa, 0]]).

The system is linear, so the first and second moments of the extended
vector ``xi = (v_1, v_2, v_1^dagger, v_2^dagger)`` obey closed equations.
The second moments are kept as ``Q_ij = <xi_i xi_j^dagger>`` and obey the
Lyapunov equation ``dQ/dz = K Q + Q K^dagger + D`` which is integrated
exactly over every constant piece with Van Loan's block exponential.

Reservoir operators are vacuum: ``<f_i(z) f_j^dagger(z')> = delta_ij delta(z - z')``
and every normally ordered correlator vanishes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .apt_core import EffectiveModel, TransferCoefficients, bogoliubov_coefficients, to_db
from .errors import NumericError

#: seed photon number below which the bright-seed linearisation is suspect
LINEARISATION_THRESHOLD = 1e3

# xi_dagger = _DAGGER @ xi  for xi = (v1, v2, v1^dagger, v2^dagger)
_DAGGER = np.array(
    [[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]], dtype=complex
)
# reservoir basis F = (f_p, f_s, f_p^dagger, f_s^dagger); u = (f_p, f_s^dagger), w = (f_p^dagger, f_s)
_U = np.array([[1, 0, 0, 0], [0, 0, 0, 1]], dtype=complex)
_W = np.array([[0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)
_VACUUM_RESERVOIR = np.diag([1.0, 1.0, 0.0, 0.0]).astype(complex)


def principal_sqrt_2x2(m: np.ndarray, atol: float = 1e-14) -> np.ndarray:
    """Principal square root of a 2x2 matrix from its eigenvalues.

    Uses ``sqrt(M) = (M + s I) / t`` with ``s = sqrt(mu1) sqrt(mu2)`` and
    ``t = sqrt(mu1) + sqrt(mu2)``, which also covers defective matrices.
    Raises NumericError when the principal branch is not defined.
    """
    m = np.asarray(m, dtype=complex)
    scale = max(float(np.abs(m).max()), 1.0)
    if np.abs(m).max() <= atol:
        return np.zeros((2, 2), dtype=complex)
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = np.sqrt(tr * tr / 4 - det)
    mus = (tr / 2 + disc, tr / 2 - disc)
    for mu in mus:
        if mu.real < 0 and abs(mu.imag) <= atol * scale:
            raise NumericError(
                f"noise kernel eigenvalue {mu:.6g} lies on the negative real axis; "
                "principal square root undefined"
            )
    r1, r2 = np.sqrt(mus[0]), np.sqrt(mus[1])
    t = r1 + r2
    if abs(t) <= atol * math.sqrt(scale):
        raise NumericError("noise kernel is nilpotent; it has no square root")
    return (m + r1 * r2 * np.eye(2)) / t


@dataclass(frozen=True)
class LossyGenerator:
    """Drift and noise of the lossy equations for one homogeneous slab."""

    drift: np.ndarray
    noise_matrix: np.ndarray
    model: EffectiveModel | None = None

    @property
    def noise_real(self) -> np.ndarray:
        return self.noise_matrix.real

    @property
    def noise_imag(self) -> np.ndarray:
        return self.noise_matrix.imag

    def noise_coupling(self) -> np.ndarray:
        """4x4 map from the reservoir basis into the noise on ``xi``."""
        g = 1j * self.noise_real @ _U + 1j * self.noise_imag @ _W
        return np.vstack([g, np.conj(g) @ _DAGGER])

    def full_diffusion(self) -> np.ndarray:
        g = self.noise_coupling()
        return g @ _VACUUM_RESERVOIR @ g.conj().T

    @property
    def diffusion(self) -> np.ndarray:
        """Source of the ``<dv dv^dagger>`` block per unit length."""
        return self.full_diffusion()[:2, :2]

    def extended_drift(self) -> np.ndarray:
        k = -1j * self.drift
        z = np.zeros((2, 2), dtype=complex)
        return np.block([[k, z], [z, np.conj(k)]])


def build_lossy_generator(model: EffectiveModel) -> LossyGenerator:
    half = model.delta_k / 2.0
    alpha = complex(model.alpha)
    kappa = complex(model.kappa)
    if alpha.real < 0:
        raise ValueError("Re(alpha) must be non-negative")
    drift = np.array([[-half - 1j * alpha, -kappa], [kappa, half]], dtype=complex)
    kernel = 2.0 * np.array([[alpha.real, kappa.imag], [-kappa.imag, 0.0]], dtype=complex)
    return LossyGenerator(drift, principal_sqrt_2x2(kernel), model)


def lossy_spectrum(model: EffectiveModel) -> tuple[complex, complex]:
    """Eigenvalues of the lossy drift; reduce to ``spectrum`` when alpha = 0."""
    half = model.delta_k / 2.0
    alpha = complex(model.alpha)
    root = np.sqrt((half + 0.5j * alpha) ** 2 - complex(model.kappa) ** 2)
    if model.delta_k < 0:
        root = -root
    centre = -0.5j * alpha
    return complex(centre + root), complex(centre - root)


@dataclass
class MomentState:
    """Means of ``(a_p, a_s^dagger)`` and the second moments of ``xi``.

    Means are in units of the seed amplitude: a probe seed of
    ``n_p0`` photons is represented by ``mean = (1, 0)`` and the photon
    number enters only in :func:`variance_diff_photon`.
    """

    mean: np.ndarray
    cov: np.ndarray = field(repr=False)
    # cov = the maps Q -> F Q F^dagger + S in ``lineage`` applied to ``origin``;
    # kept so that quadratic forms can be evaluated without cancellation
    origin: np.ndarray | None = field(default=None, repr=False, compare=False)
    lineage: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=complex).reshape(2)
        self.cov = np.asarray(self.cov, dtype=complex).reshape(4, 4)

    def extended(self, mean, cov, f, s, repeat: int = 1) -> "MomentState":
        """A successor state reached by ``repeat`` applications of ``Q -> F Q F^dagger + S``."""
        origin = self.cov if self.origin is None else self.origin
        return MomentState(mean, cov, origin, self.lineage + ((f, s, repeat),))

    def quadratic_form(self, w) -> float:
        """``Re(w Q w^dagger)`` evaluated backwards through the lineage.

        Pulling the row ``w`` back step by step keeps every term of the
        order of the result, whereas contracting the dense ``Q`` cancels
        terms of order ``|w|^2 |Q|`` at high gain.
        """
        w = np.asarray(w, dtype=complex)
        if self.origin is None:
            return float(np.real(w @ self.cov @ w.conj()))
        rho, total = w, 0.0
        for f, s, repeat in reversed(self.lineage):
            for _ in range(repeat):
                total += float(np.real(rho @ s @ rho.conj()))
                rho = rho @ f
        return total + float(np.real(rho @ self.origin @ rho.conj()))

    @classmethod
    def coherent_seed(cls, probe: complex = 1.0, stokes_dag: complex = 0.0) -> "MomentState":
        """Coherent probe and Stokes inputs (vacuum fluctuations)."""
        return cls(np.array([probe, stokes_dag]), np.diag([1.0, 0.0, 0.0, 1.0]))

    @property
    def mean_p(self) -> complex:
        return complex(self.mean[0])

    @property
    def mean_s_dag(self) -> complex:
        return complex(self.mean[1])

    @property
    def normal_block(self) -> np.ndarray:
        """``<dv_i dv_j^dagger>``."""
        return self.cov[:2, :2]

    @property
    def anomalous_block(self) -> np.ndarray:
        """``<dv_i dv_j>``."""
        return self.cov[:2, 2:]

    @property
    def conjugate_block(self) -> np.ndarray:
        """``<dv_i^dagger dv_j>``."""
        return self.cov[2:, 2:]

    def transfer_coefficients(self) -> TransferCoefficients:
        return TransferCoefficients(self.mean_p, self.mean_s_dag)

    def validate(self, atol: float = 1e-12):
        scale = max(1.0, float(np.abs(self.cov).max()))
        if np.abs(self.cov - self.cov.conj().T).max() > atol * scale:
            raise NumericError("second-moment matrix is not Hermitian")
        if np.min(np.diag(self.cov).real) < -atol * scale:
            raise NumericError("negative diagonal second moment")


@dataclass(frozen=True)
class VarianceReport:
    coherent_term: float
    langevin_term: float
    total_var: float
    mean_np: float
    mean_ns: float
    squeezing_S: float
    squeezing_dB: float
    linearisation_ok: bool = True


def _doubling(step_fn, length, rtol, max_doublings, start=0):
    """Evaluate ``step_fn(n, length)`` for n = 2^start, 2^(start+1), ... until it settles.

    Returns the converged value and its step count.
    """
    prev = step_fn(2**start, length)
    achieved = math.inf
    for k in range(start + 1, start + max_doublings + 1):
        cur = step_fn(2**k, length)
        ref = max(_norm(cur), 1e-300)
        achieved = _norm_diff(cur, prev) / ref
        if achieved < rtol:
            return cur, 2**k
        prev = cur
    raise NumericError(
        f"propagation did not converge: relative change {achieved:.3g} "
        f"after {2**(start + max_doublings)} steps (target {rtol:.1e})"
    )


def _min_doublings(k: np.ndarray, length: float) -> int:
    """Smallest power of two keeping each substep's growth factor near e."""
    growth = float(np.abs(k).sum(axis=1).max()) * length
    return max(0, math.ceil(math.log2(growth))) if growth > 1 else 0


def _norm(x):
    if isinstance(x, tuple):
        return max(float(np.abs(y).max()) for y in x)
    return float(np.abs(x).max())


def _norm_diff(a, b):
    if isinstance(a, tuple):
        return max(float(np.abs(x - y).max()) for x, y in zip(a, b))
    return float(np.abs(a - b).max())


def _mean_propagator(gen: LossyGenerator, length, rtol=1e-10, max_doublings=10):
    k = -1j * gen.drift

    def step(n, ell):
        p = scipy.linalg.expm(k * (ell / n))
        return np.linalg.matrix_power(p, n)

    return _doubling(step, length, rtol, max_doublings)[0]


def _moment_propagator(gen: LossyGenerator, length, rtol=1e-10, max_doublings=10):
    """``(F, S, F1, S1, n)``: ``Q(L) = F Q(0) F^dagger + S``, equal to n substeps ``(F1, S1)``."""
    kk = gen.extended_drift()
    dd = gen.full_diffusion()
    z = np.zeros((4, 4), dtype=complex)
    block = np.block([[kk, dd], [z, -kk.conj().T]])

    substeps = {}

    def step(n, ell):
        e = scipy.linalg.expm(block * (ell / n))
        f1 = e[:4, :4]
        s1 = e[:4, 4:] @ f1.conj().T
        f, s = np.eye(4, dtype=complex), np.zeros((4, 4), dtype=complex)
        for _ in range(n):
            s = f1 @ s @ f1.conj().T + s1
            f = f1 @ f
        substeps[n] = (f1, s1)
        return f, s

    (f, s), n = _doubling(step, length, rtol, max_doublings, _min_doublings(kk, length))
    return f, s, substeps[n][0], substeps[n][1], n


def propagate_mean(gen: LossyGenerator, length: float, seed: MomentState | None = None,
                   rtol: float = 1e-10):
    """Propagate the means; returns ``(TransferCoefficients, output_mean)``.

    A and C are read off the first column of ``exp(-i M L)``.
    """
    if not length > 0:
        raise ValueError("length must be positive")
    if seed is None:
        seed = MomentState.coherent_seed()
    p = _mean_propagator(gen, length, rtol)
    return TransferCoefficients(complex(p[0, 0]), complex(p[1, 0])), p @ seed.mean


def propagate_moments(gen: LossyGenerator, length: float, seed: MomentState | None = None,
                      rtol: float = 1e-10, positivity_tol: float = 1e-9) -> MomentState:
    if not length > 0:
        raise ValueError("length must be positive")
    if seed is None:
        seed = MomentState.coherent_seed()
    seed.validate()
    _, mean = propagate_mean(gen, length, seed, rtol)
    f, s, f1, s1, n = _moment_propagator(gen, length, rtol)
    cov = f @ seed.cov @ f.conj().T + s
    herm_err = np.abs(cov - cov.conj().T).max()
    scale = max(1.0, float(np.abs(cov).max()))
    if herm_err > positivity_tol * scale:
        raise NumericError(f"second moments lost hermiticity ({herm_err:.3g})")
    cov = 0.5 * (cov + cov.conj().T)
    min_eig = float(np.linalg.eigvalsh(cov).min())
    if min_eig < -positivity_tol * scale:
        raise NumericError(f"second moments lost positivity (min eigenvalue {min_eig:.3g})")
    return seed.extended(mean, cov, f1, s1, n)


def propagate_piecewise(segments, seed: MomentState | None = None,
                        rtol: float = 1e-10) -> MomentState:
    """Chain :func:`propagate_moments` over ``[(generator, length), ...]``."""
    state = MomentState.coherent_seed() if seed is None else seed
    for gen, length in segments:
        state = propagate_moments(gen, length, state, rtol)
    return state


def _photon_difference_weights(mean, n_p0):
    amp = np.asarray(mean, dtype=complex) * math.sqrt(n_p0)
    return np.array([np.conj(amp[0]), -np.conj(amp[1]), amp[0], -amp[1]])


def _report(total, mean, n_p0, extra=0.0):
    np_out = abs(mean[0]) ** 2 * n_p0
    ns_out = abs(mean[1]) ** 2 * n_p0
    total = total + extra
    coherent = (abs(mean[0]) ** 2 - abs(mean[1]) ** 2) ** 2 * n_p0
    s = total / (np_out + ns_out)
    return VarianceReport(
        coherent_term=coherent,
        langevin_term=total - coherent,
        total_var=total,
        mean_np=np_out,
        mean_ns=ns_out,
        squeezing_S=s,
        squeezing_dB=to_db(s),
        linearisation_ok=n_p0 >= LINEARISATION_THRESHOLD,
    )


def variance_diff_photon(moments: MomentState, n_p0: float, extra_variance: float = 0.0
                         ) -> VarianceReport:
    """Linearised ``Var(n_p - n_s)`` for a bright probe seed of ``n_p0`` photons.

    ``extra_variance`` is added to the total (e.g. a detector noise floor).
    """
    if not n_p0 > 0:
        raise ValueError("n_p0 must be positive")
    if n_p0 < LINEARISATION_THRESHOLD:
        warnings.warn(
            f"n_p0={n_p0:g} < {LINEARISATION_THRESHOLD:g}: linearised variance may be inaccurate",
            stacklevel=2,
        )
    w = _photon_difference_weights(moments.mean, n_p0)
    total = moments.quadratic_form(w)
    if not total > 0:
        raise NumericError(f"Var(n_p - n_s) = {total:.3g} is not positive; precision lost")
    return _report(total, moments.mean, n_p0, extra_variance)


def beamsplitter_slice_oracle(model: EffectiveModel, slices: int, n_p0: float) -> VarianceReport:
    """Reference ``Var(n_p - n_s)`` from a sliced operator construction.

    Each of the ``slices`` pieces applies the exact lossless transfer over
    ``L/slices`` followed by a beamsplitter on the probe with intensity
    transmissivity ``exp(-2 Re(alpha) L/slices)`` that admits fresh vacuum.
    The output photon-difference operator is a linear combination of the
    input and all admitted vacua; its variance is the sum of the squared
    coefficients.  No moment equation is solved.

    For complex kappa the transfer is no longer a Bogoliubov map and a
    beamsplitter cannot restore the commutators.  Each piece then applies
    the lossy drift and admits fresh reservoir modes through the noise
    matrices scaled by ``sqrt(L/slices)``.
    """
    if slices < 100:
        raise ValueError("slices must be at least 100")
    if not n_p0 > 0:
        raise ValueError("n_p0 must be positive")
    dz = model.length / slices
    alpha = complex(model.alpha)
    kappa = complex(model.kappa)

    if kappa.imag == 0:
        a, c = bogoliubov_coefficients(model.delta_k, kappa.real, dz)
        seg = np.array([[a, np.conj(c)], [c, np.conj(a)]], dtype=complex)
        t_amp = math.exp(-alpha.real * dz) * np.exp(-1j * alpha.imag * dz)
        leak = 1.0 - math.exp(-2.0 * alpha.real * dz)
        piece = np.diag([t_amp, 1.0]) @ seg
        extra = None
    else:
        gen = build_lossy_generator(model)
        piece = scipy.linalg.expm(-1j * gen.drift * dz)
        leak = 0.0
        extra = gen.noise_coupling() * math.sqrt(dz)

    mean = np.array([1.0, 0.0], dtype=complex)
    for _ in range(slices):
        mean = piece @ mean

    big = np.block([[piece, np.zeros((2, 2))], [np.zeros((2, 2)), np.conj(piece)]])
    row = _photon_difference_weights(mean, n_p0)
    var = 0.0
    for _ in range(slices):
        if extra is not None:
            coef = row @ extra
            var += float(np.real(coef @ _VACUUM_RESERVOIR @ coef.conj()))
        # vacuum admitted on the probe enters v1 (annihilator) and v1^dagger
        var += leak * abs(row[0]) ** 2
        row = row @ big
    # coherent seed: <v1 v1^dagger> = <v2^dagger v2> = 1, everything else 0
    var += abs(row[0]) ** 2 + abs(row[3]) ** 2
    return _report(var, mean, n_p0)
