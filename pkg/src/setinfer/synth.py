"""Synthetic dataset families with known ground-truth conditionals.

Four families. Each has a fixed generative process whose parameters are
functions of a named role, and role descriptions come from a fixed word
bank, so semantically identical features across generated bundles share
descriptions even when their ids differ. The matching oracle exposes
exact conditional distributions for convergence and acquisition tests.

  linear-gaussian        jointly Gaussian continuous panel (fixed cov)
  categorical-bayes-net  binary flag + conditionally independent indicators
  xor-style              parity flag of two fair toggles (+ spare noise)
  mixed                  binary group label + class-conditional readings
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DatasetBundle, FeatureSpec, Instance, Value
from .errors import DataError

FAMILIES = ("linear-gaussian", "categorical-bayes-net", "xor-style", "mixed")

# -- word bank -----------------------------------------------------------

LG_TARGET = ("resp", "composite response level at the end of the cycle", (0.0, 50.0))
LG_PREDICTORS = (
    ("s1", "primary sensor reading on channel one", (0.0, 200.0)),
    ("s2", "secondary sensor reading on channel two", (-100.0, 100.0)),
    ("s3", "auxiliary sensor reading on channel three", (0.0, 1.0)),
    ("s4", "spare sensor reading on channel four", (10.0, 90.0)),
    ("s5", "drift compensated reading on channel five", (0.0, 500.0)),
)

# Bayes-net roles: name -> (P(x=1|y=0), P(x=1|y=1), description).
BN_ROLES = {
    "copy": (0.0, 1.0, "exact duplicate of the outcome flag from a second recorder"),
    "mirror": (0.02, 0.98, "near perfect mirror of the outcome flag"),
    "strong": (0.12, 0.88, "strong positive indicator correlated with the outcome"),
    "inverse": (0.80, 0.20, "inverted indicator that tends to oppose the outcome"),
    "medium": (0.25, 0.75, "moderate indicator loosely tracking the outcome"),
    "mild": (0.36, 0.64, "weak indicator with slight association to the outcome"),
    "noise": (0.50, 0.50, "background reading unrelated to the outcome"),
}
BN_DEFAULT_POOL = ("mirror", "strong", "inverse", "medium", "mild", "noise")
BN_TARGET = ("flag", "binary outcome flag to be predicted", ("no", "yes"))
BN_CHOICES = ("absent", "present")

XOR_DESCS = {
    "parity": "parity outcome of the two toggle switches",
    "tog1": "state of the first toggle switch",
    "tog2": "state of the second toggle switch",
    "spare": "independent spare toggle unrelated to the parity",
}

# Mixed roles: name -> (mean | y=0, mean | y=1, sd, description).
MIX_ROLES = {
    "separated": (0.30, 0.70, 0.08, "well separated marker elevated in the high group"),
    "shifted": (0.40, 0.60, 0.09, "mildly shifted marker between the groups"),
    "flat": (0.50, 0.50, 0.10, "marker with no relation to the group"),
}
MIX_TARGET = ("group", "latent group assignment to predict", ("low", "high"))


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    n_rows: int = 200
    n_predictors: int = 3
    roles: tuple = ()      # explicit role names; empty = sample without replacement
    id_suffix: str = ""    # rename ids, keep descriptions (cross-schema eval)
    name: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DataError(f"unknown synth family {self.family!r}")

    def bundle_name(self, seed: int) -> str:
        return self.name or f"{self.family}-{seed}"


# -- oracles -------------------------------------------------------------


@dataclass
class LinearGaussianOracle:
    """Exact conditionals of a joint Gaussian in normalized value space."""

    ids: tuple
    mean: np.ndarray
    cov: np.ndarray

    def _idx(self, fid: str) -> int:
        return self.ids.index(fid)

    def conditional(self, fid: str, observed: dict) -> tuple:
        t = self._idx(fid)
        if not observed:
            return float(self.mean[t]), float(np.sqrt(self.cov[t, t]))
        obs = sorted(self._idx(f) for f in observed)
        x = np.array([observed[self.ids[i]] for i in obs])
        s_oo = self.cov[np.ix_(obs, obs)]
        s_to = self.cov[t, obs]
        w = np.linalg.solve(s_oo, x - self.mean[obs])
        mu = float(self.mean[t] + s_to @ w)
        var = float(self.cov[t, t] - s_to @ np.linalg.solve(s_oo, s_to))
        return mu, float(np.sqrt(var))

    def nll(self, fid: str, value: float, observed: dict) -> float:
        mu, sd = self.conditional(fid, observed)
        z = (value - mu) / sd
        return float(0.5 * np.log(2.0 * np.pi) + np.log(sd) + 0.5 * z * z)


@dataclass
class DiscreteOracle:
    """Exact inference over a small explicit joint table (binary variables)."""

    ids: tuple
    table: np.ndarray  # shape (2,) * len(ids), sums to 1

    def _axis(self, fid: str) -> int:
        return self.ids.index(fid)

    def posterior(self, fid: str, observed: dict) -> np.ndarray:
        if fid in observed:
            out = np.zeros(2)
            out[int(observed[fid])] = 1.0
            return out
        t = self.table
        index = [slice(None)] * t.ndim
        for f, v in observed.items():
            index[self._axis(f)] = int(v)
        sub = t[tuple(index)]
        keep = self._axis(fid) - sum(1 for f in observed if self._axis(f) < self._axis(fid))
        axes = tuple(i for i in range(sub.ndim) if i != keep)
        marg = sub.sum(axis=axes) if axes else sub
        total = marg.sum()
        if total <= 0:
            raise DataError("oracle: observed configuration has zero probability")
        return marg / total

    def nll(self, fid: str, index: int, observed: dict) -> float:
        p = self.posterior(fid, observed)[int(index)]
        return float(-np.log(p))

    def entropy(self, fid: str, observed: dict) -> float:
        p = self.posterior(fid, observed)
        nz = p[p > 0]
        return float(-(nz * np.log(nz)).sum())

    def mi(self, target: str, candidate: str, observed: dict) -> float:
        """Exact I(target; candidate | observed config)."""
        pc = self.posterior(candidate, observed)
        pt = self.posterior(target, observed)
        total = 0.0
        for v in range(pc.size):
            if pc[v] <= 0:
                continue
            post = self.posterior(target, {**observed, candidate: v})
            nz = post > 0
            total += pc[v] * float((post[nz] * np.log(post[nz] / pt[nz])).sum())
        return total


@dataclass
class MixedOracle:
    """Class-conditional Gaussian panel: binary label, continuous markers."""

    label_id: str
    cont_ids: tuple
    params: dict  # fid -> (mu0, mu1, sd)
    prior: float = 0.5

    def posterior_label(self, observed: dict) -> np.ndarray:
        # observed: continuous fid -> normalized value (label never observed here)
        logp = np.array([np.log(1.0 - self.prior), np.log(self.prior)])
        for fid, v in observed.items():
            mu0, mu1, sd = self.params[fid]
            for y, mu in enumerate((mu0, mu1)):
                z = (v - mu) / sd
                logp[y] += -0.5 * z * z - np.log(sd)
        logp -= logp.max()
        p = np.exp(logp)
        return p / p.sum()

    def cont_conditional(self, fid: str, observed: dict) -> tuple:
        """Mixture of the two class-conditional Gaussians for one marker."""
        rest = {f: v for f, v in observed.items() if f != fid and f != self.label_id}
        if self.label_id in observed:
            y = int(observed[self.label_id])
            w = np.zeros(2)
            w[y] = 1.0
        else:
            w = self.posterior_label(rest)
        mu0, mu1, sd = self.params[fid]
        return w, np.array([mu0, mu1]), np.array([sd, sd])

    def nll(self, fid: str, value, observed: dict) -> float:
        if fid == self.label_id:
            p = self.posterior_label({f: v for f, v in observed.items() if f != fid})
            return float(-np.log(p[int(value)]))
        w, mus, sds = self.cont_conditional(fid, observed)
        z = (value - mus) / sds
        dens = (w / (sds * np.sqrt(2.0 * np.pi))) * np.exp(-0.5 * z * z)
        return float(-np.log(dens.sum()))


# -- process construction ------------------------------------------------


def _lg_process(spec: GeneratorSpec):
    m = spec.n_predictors + 1
    if spec.n_predictors > len(LG_PREDICTORS):
        raise DataError(f"linear-gaussian supports <= {len(LG_PREDICTORS)} predictors")
    bank = [LG_TARGET] + list(LG_PREDICTORS[: spec.n_predictors])
    # Fixed factor structure: depends only on the panel size, never the seed,
    # so every bundle of the family shares one joint law per width.
    prng = np.random.default_rng(90210 + m)
    loadings = prng.normal(scale=0.06, size=(m, 2))
    cov = loadings @ loadings.T + np.eye(m) * 0.03**2
    mean = np.full(m, 0.5)
    ids = tuple(fid + spec.id_suffix for fid, _, _ in bank)
    features = tuple(
        FeatureSpec(id=fid + spec.id_suffix, desc=desc, ftype="continuous", range=rng)
        for fid, desc, rng in bank
    )
    return features, LinearGaussianOracle(ids=ids, mean=mean, cov=cov)


def _bn_roles(spec: GeneratorSpec, rng: np.random.Generator) -> tuple:
    if spec.roles:
        for r in spec.roles:
            if r not in BN_ROLES:
                raise DataError(f"unknown bayes-net role {r!r}")
        if len(spec.roles) != spec.n_predictors:
            raise DataError(
                f"{len(spec.roles)} roles given for {spec.n_predictors} predictors"
            )
        return tuple(spec.roles)
    picked = rng.choice(len(BN_DEFAULT_POOL), size=spec.n_predictors, replace=False)
    return tuple(BN_DEFAULT_POOL[i] for i in sorted(picked))


def _bn_process(spec: GeneratorSpec, roles: tuple):
    tid, tdesc, tchoices = BN_TARGET
    features = [
        FeatureSpec(id=tid + spec.id_suffix, desc=tdesc, ftype="categorical", choices=tchoices)
    ]
    qs = []
    for i, role in enumerate(roles):
        q0, q1, desc = BN_ROLES[role]
        features.append(
            FeatureSpec(
                id=f"x{i + 1}_{role}{spec.id_suffix}",
                desc=desc,
                ftype="categorical",
                choices=BN_CHOICES,
            )
        )
        qs.append((q0, q1))
    ids = tuple(f.id for f in features)
    shape = (2,) * len(ids)
    table = np.zeros(shape)
    for flat in np.ndindex(shape):
        y, xs = flat[0], flat[1:]
        p = 0.5
        for (q0, q1), x in zip(qs, xs):
            q = q1 if y == 1 else q0
            p *= q if x == 1 else 1.0 - q
        table[flat] = p
    return tuple(features), DiscreteOracle(ids=ids, table=table)


def _xor_process(spec: GeneratorSpec):
    n_spare = max(0, spec.n_predictors - 2)
    names = ["parity", "tog1", "tog2"] + ["spare"] * n_spare
    features = []
    for i, base in enumerate(names):
        fid = base if base != "spare" else f"spare{i - 2}"
        features.append(
            FeatureSpec(
                id=fid + spec.id_suffix,
                desc=XOR_DESCS[base],
                ftype="categorical",
                choices=("off", "on"),
            )
        )
    ids = tuple(f.id for f in features)
    shape = (2,) * len(ids)
    table = np.zeros(shape)
    for flat in np.ndindex(shape):
        y, x1, x2 = flat[0], flat[1], flat[2]
        if y != (x1 ^ x2):
            continue
        table[flat] = 0.25 * (0.5 ** max(0, len(flat) - 3))
    return tuple(features), DiscreteOracle(ids=ids, table=table)


def _mix_roles(spec: GeneratorSpec, rng: np.random.Generator) -> tuple:
    if spec.roles:
        for r in spec.roles:
            if r not in MIX_ROLES:
                raise DataError(f"unknown mixed role {r!r}")
        return tuple(spec.roles)
    pool = tuple(MIX_ROLES)
    replace = spec.n_predictors > len(pool)
    picked = rng.choice(len(pool), size=spec.n_predictors, replace=replace)
    return tuple(pool[i] for i in picked)


def _mix_process(spec: GeneratorSpec, roles: tuple):
    tid, tdesc, tchoices = MIX_TARGET
    features = [
        FeatureSpec(id=tid + spec.id_suffix, desc=tdesc, ftype="categorical", choices=tchoices)
    ]
    params = {}
    for i, role in enumerate(roles):
        mu0, mu1, sd, desc = MIX_ROLES[role]
        fid = f"m{i + 1}_{role}{spec.id_suffix}"
        features.append(
            FeatureSpec(id=fid, desc=desc, ftype="continuous", range=(0.0, 10.0))
        )
        params[fid] = (mu0, mu1, sd)
    oracle = MixedOracle(
        label_id=tid + spec.id_suffix,
        cont_ids=tuple(f.id for f in features[1:]),
        params=params,
    )
    return tuple(features), oracle


CONTEXTS = {
    "linear-gaussian": "simulated sensor panel with correlated continuous readings",
    "categorical-bayes-net": "simulated diagnostic panel of binary indicators for a target flag",
    "xor-style": "two toggle switches and their parity outcome",
    "mixed": "mixed panel with a group label and continuous markers",
}


def _truncated_normal_columns(rng, means, sds, n_rows):
    """Per-column independent normals rejection-sampled into [0, 1]."""
    cols = np.empty((n_rows, len(means)))
    for j, (mu, sd) in enumerate(zip(means, sds)):
        need = n_rows
        out = []
        while need > 0:
            draw = rng.normal(mu, sd, size=max(need * 2, 16))
            ok = draw[(draw >= 0.0) & (draw <= 1.0)]
            out.append(ok[:need])
            need -= len(out[-1])
        cols[:, j] = np.concatenate(out)
    return cols


def build(spec: GeneratorSpec, seed: int):
    """The bundle and its oracle, jointly determined by (spec, seed)."""
    rng = np.random.default_rng(seed)
    if spec.family == "linear-gaussian":
        features, oracle = _lg_process(spec)
        m = len(features)
        rows_norm = np.empty((0, m))
        while rows_norm.shape[0] < spec.n_rows:
            draw = rng.multivariate_normal(oracle.mean, oracle.cov, size=spec.n_rows * 2)
            ok = draw[np.all((draw >= 0.0) & (draw <= 1.0), axis=1)]
            rows_norm = np.vstack([rows_norm, ok])
        rows_norm = rows_norm[: spec.n_rows]
        rows = []
        for r in rows_norm:
            atoms = {}
            for f, u in zip(features, r):
                lo, hi = f.range
                atoms[f.id] = Value.cont(lo + u * (hi - lo), lo, hi)
            rows.append(Instance(atoms=atoms))
        target = features[0].id

    elif spec.family in ("categorical-bayes-net", "xor-style"):
        if spec.family == "categorical-bayes-net":
            roles = _bn_roles(spec, rng)
            features, oracle = _bn_process(spec, roles)
        else:
            features, oracle = _xor_process(spec)
        flat = oracle.table.reshape(-1)
        picks = rng.choice(flat.size, size=spec.n_rows, p=flat)
        shape = oracle.table.shape
        rows = []
        for pick in picks:
            config = np.unravel_index(pick, shape)
            atoms = {f.id: Value.cat(v) for f, v in zip(features, config)}
            rows.append(Instance(atoms=atoms))
        target = features[0].id

    else:  # mixed
        roles = _mix_roles(spec, rng)
        features, oracle = _mix_process(spec, roles)
        ys = rng.integers(0, 2, size=spec.n_rows)
        mus = {0: [], 1: []}
        sds = []
        for f in features[1:]:
            mu0, mu1, sd = oracle.params[f.id]
            mus[0].append(mu0)
            mus[1].append(mu1)
            sds.append(sd)
        cols0 = _truncated_normal_columns(rng, mus[0], sds, spec.n_rows)
        cols1 = _truncated_normal_columns(rng, mus[1], sds, spec.n_rows)
        rows = []
        for i, y in enumerate(ys):
            atoms = {features[0].id: Value.cat(int(y))}
            vals = cols1[i] if y == 1 else cols0[i]
            for f, u in zip(features[1:], vals):
                lo, hi = f.range
                atoms[f.id] = Value.cont(lo + u * (hi - lo), lo, hi)
            rows.append(Instance(atoms=atoms))
        target = features[0].id

    bundle = DatasetBundle(
        name=spec.bundle_name(seed),
        context=CONTEXTS[spec.family],
        features=features,
        rows=tuple(rows),
        target_ids=(target,),
    )
    return bundle, oracle


def synth_generate(spec: GeneratorSpec, seed: int) -> DatasetBundle:
    return build(spec, seed)[0]


def ground_truth(spec: GeneratorSpec, seed: int):
    return build(spec, seed)[1]
