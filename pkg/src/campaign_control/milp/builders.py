"""The DG model, the basic BC model and the advanced BC model.

Variable names are stable and human-readable:

=====================================  ==============================================
``x_t_i``                              opinion of voter ``i`` in stage ``t`` (``i = 0``: control)
``z_i``                                voter ``i`` convinced at the horizon (DG, basic)
``v_t_i_j``                            voters ``i < j`` within confidence distance (basic)
``l_t_i`` / ``r_t_i`` / ``c_t_i``      control left of / right of / inside ``i``'s reach (basic)
``xb_t_j_i``                           contribution of opinion ``j`` to voter ``i`` (basic)
``k_t_i``, ``kappa_t_i_k``             confidence-set size and its one-hot encoding (basic)
``conf_t_i_jmin_jmax_cl_cr``           confidence configuration of voter ``i`` (advanced)
``conv_jmin_jmax``                     block of convinced voters at the horizon (advanced)
``dl_t_i`` / ``dr_t_i``                distance below ``l`` / above ``r`` (advanced)
``p_t_i_j``, ``q_t_i``                 pairwise / control influence indicators (advanced)
=====================================  ==============================================
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..dynamics import Instance, InstanceError, PerturbationUndefined, Trajectory
from .model import BINARY, INTEGER, Guard, MilpModel

DEFAULT_EPS_HAT = Fraction(1, 100_000)
ONE = Fraction(1)


@dataclass(frozen=True)
class MilpBuildOptions:
    eps_hat: Fraction = DEFAULT_EPS_HAT
    symmetry_break: bool = False

    def __post_init__(self):
        object.__setattr__(self, "eps_hat", Fraction(self.eps_hat))


def x(t: int, i: int) -> str:
    return f"x_{t}_{i}"


def _state_vars(model: MilpModel, instance: Instance, N: int) -> None:
    for t in range(N + 1):
        if t < N:
            model.add_var(x(t, 0), stage=t)
        for i in range(1, instance.n + 1):
            model.add_var(x(t, i), stage=t)
    for i, value in enumerate(instance.start, start=1):
        model.add(f"start_{i}", [(x(0, i), ONE)], "=", value)


def _check_options(instance: Instance, options: MilpBuildOptions) -> None:
    if abs(options.eps_hat) >= instance.epsilon:
        raise ValueError(f"|eps_hat| = {abs(options.eps_hat)} must be smaller than epsilon = {instance.epsilon}")


# ---------------------------------------------------------------------- DG

def build_dg_model(instance: Instance, N: int) -> MilpModel:
    if instance.is_bc:
        raise InstanceError("the DG model needs DeGroot dynamics")
    n, left, right = instance.n, instance.left, instance.right
    m = MilpModel(f"dg_n{n}_N{N}", info={"kind": "dg", "N": N, "n": n})
    _state_vars(m, instance, N)
    for i in range(1, n + 1):
        m.add_var(f"z_{i}", BINARY, stage=N)
    for t in range(N):
        for i, row in enumerate(instance.weights, start=1):
            terms = [(x(t + 1, i), ONE)] + [(x(t, j), -w) for j, w in enumerate(row)]
            m.add(f"dyn_{t}_{i}", terms, "=", 0)
    for i in range(1, n + 1):
        # l - x <= l (1 - z)   and   x - r <= (1 - r)(1 - z)
        m.add(f"convl_{i}", [(x(N, i), -ONE), (f"z_{i}", left)], "<=", 0)
        m.add(f"convr_{i}", [(x(N, i), ONE), (f"z_{i}", 1 - right)], "<=", 1)
    m.set_objective([(f"z_{i}", ONE) for i in range(1, n + 1)])
    return m


def dg_assignment(instance: Instance, trajectory: Trajectory) -> dict[str, Fraction]:
    N = trajectory.stages
    a = _state_assignment(trajectory, N)
    for i, xi in enumerate(trajectory.final, start=1):
        a[f"z_{i}"] = Fraction(int(instance.left <= xi <= instance.right))
    return a


def _state_assignment(trajectory: Trajectory, N: int) -> dict[str, Fraction]:
    a: dict[str, Fraction] = {}
    controls = trajectory.controls or (Fraction(0),) * N
    for t, state in enumerate(trajectory.states):
        if t < N:
            a[x(t, 0)] = controls[t]
        for i, xi in enumerate(state, start=1):
            a[x(t, i)] = xi
    return a


# ---------------------------------------------------------------------- BC basic

def build_bc_basic_model(instance: Instance, N: int, options: MilpBuildOptions = MilpBuildOptions()) -> MilpModel:
    if not instance.is_bc:
        raise InstanceError("the basic BC model needs bounded-confidence dynamics")
    _check_options(instance, options)
    n, eps, far = instance.n, instance.epsilon, instance.epsilon + options.eps_hat
    m = MilpModel(f"bc_basic_n{n}_N{N}", info={"kind": "bc-basic", "N": N, "n": n, "eps_hat": options.eps_hat})
    _state_vars(m, instance, N)
    I = range(1, n + 1)
    for t in range(N):
        for i in I:
            for name in ("l", "r", "c"):
                m.add_var(f"{name}_{t}_{i}", BINARY, stage=t)
            for j in I:
                if i < j:
                    m.add_var(f"v_{t}_{i}_{j}", BINARY, stage=t)
            m.add_var(f"k_{t}_{i}", INTEGER, 1, n + 1, stage=t)
            for k in range(1, n + 2):
                m.add_var(f"kappa_{t}_{i}_{k}", BINARY, stage=t)
            for j in range(0, n + 1):
                if j != i:
                    m.add_var(f"xb_{t}_{j}_{i}", stage=t)
    for i in I:
        m.add_var(f"z_{i}", BINARY, stage=N)

    for t in range(N):
        u = x(t, 0)
        for i in I:
            xi = x(t, i)
            c, l, r = f"c_{t}_{i}", f"l_{t}_{i}", f"r_{t}_{i}"
            m.add(f"ctrlpos_{t}_{i}", [(l, ONE), (r, ONE), (c, ONE)], "=", 1)
            m.add_vif(f"ctrlin_r_{t}_{i}", Guard.of(c), [(u, ONE), (xi, -ONE)], "<=", eps)
            m.add_vif(f"ctrlin_l_{t}_{i}", Guard.of(c), [(xi, ONE), (u, -ONE)], "<=", eps)
            m.add_vif(f"ctrlout_r_{t}_{i}", Guard.of(r), [(u, ONE), (xi, -ONE)], ">=", far)
            m.add_vif(f"ctrlout_l_{t}_{i}", Guard.of(l), [(xi, ONE), (u, -ONE)], ">=", far)
            for j in I:
                if i < j:
                    v = f"v_{t}_{i}_{j}"
                    diff = [(x(t, j), ONE), (xi, -ONE)]
                    m.add_vif(f"vin_{t}_{i}_{j}", Guard.of(v), diff, "<=", eps)
                    m.add_vif(f"vout_{t}_{i}_{j}", Guard.negated(v), diff, ">=", far)
            pair = [(f"v_{t}_{min(i, j)}_{max(i, j)}", ONE) for j in I if j != i]
            m.add(f"count_{t}_{i}", [(f"k_{t}_{i}", ONE)] + [(v, -ONE) for v, _ in pair] + [(c, -ONE)], "=", 1)
            # contributions
            m.add_vif(f"xbc_in_{t}_{i}", Guard.of(c), [(f"xb_{t}_0_{i}", ONE), (u, -ONE)], "=", 0)
            m.add_vif(f"xbc_out_{t}_{i}", Guard.negated(c), [(f"xb_{t}_0_{i}", ONE)], "=", 0)
            for j in I:
                if j != i:
                    v = f"v_{t}_{min(i, j)}_{max(i, j)}"
                    xb = f"xb_{t}_{j}_{i}"
                    m.add_vif(f"xbv_in_{t}_{j}_{i}", Guard.of(v), [(xb, ONE), (x(t, j), -ONE)], "=", 0)
                    m.add_vif(f"xbv_out_{t}_{j}_{i}", Guard.negated(v), [(xb, ONE)], "=", 0)
            # k = sum_k k*kappa_k with exactly one kappa set
            kap = [f"kappa_{t}_{i}_{k}" for k in range(1, n + 2)]
            m.add(f"onehot_{t}_{i}", [(kv, ONE) for kv in kap], "=", 1)
            m.add(f"kdef_{t}_{i}", [(f"k_{t}_{i}", ONE)] + [(kv, -Fraction(k)) for k, kv in enumerate(kap, start=1)],
                  "=", 0)
            inflow = [(f"xb_{t}_{j}_{i}", ONE) for j in range(0, n + 1) if j != i] + [(xi, ONE)]
            for k, kv in enumerate(kap, start=1):
                terms = [(x(t + 1, i), ONE)] + [(v, -ONE / k) for v, _ in inflow]
                m.add_vif(f"dyn_{t}_{i}_{k}", Guard.of(kv), terms, "=", 0)
    for i in I:
        z = f"z_{i}"
        m.add_vif(f"convl_{i}", Guard.of(z), [(x(N, i), ONE)], ">=", instance.left)
        m.add_vif(f"convr_{i}", Guard.of(z), [(x(N, i), ONE)], "<=", instance.right)
    m.set_objective([(f"z_{i}", ONE) for i in I])
    return m


def bc_basic_assignment(instance: Instance, trajectory: Trajectory) -> dict[str, Fraction]:
    """Variable values induced by an exactly simulated trajectory."""
    N, n, eps = trajectory.stages, instance.n, instance.epsilon
    a = _state_assignment(trajectory, N)
    for t in range(N):
        state, u = trajectory.states[t], trajectory.controls[t]
        for i in range(1, n + 1):
            xi = state[i - 1]
            inside = abs(u - xi) <= eps
            a[f"c_{t}_{i}"] = Fraction(int(inside))
            a[f"l_{t}_{i}"] = Fraction(int(not inside and u < xi))
            a[f"r_{t}_{i}"] = Fraction(int(not inside and u > xi))
            a[f"xb_{t}_0_{i}"] = u if inside else Fraction(0)
            size = 1 + int(inside)
            for j in range(1, n + 1):
                if j == i:
                    continue
                near = abs(state[j - 1] - xi) <= eps
                size += near
                if i < j:
                    a[f"v_{t}_{i}_{j}"] = Fraction(int(near))
                a[f"xb_{t}_{j}_{i}"] = state[j - 1] if near else Fraction(0)
            a[f"k_{t}_{i}"] = Fraction(size)
            for k in range(1, n + 2):
                a[f"kappa_{t}_{i}_{k}"] = Fraction(int(k == size))
    for i, xi in enumerate(trajectory.final, start=1):
        a[f"z_{i}"] = Fraction(int(instance.left <= xi <= instance.right))
    return a


# ---------------------------------------------------------------------- BC advanced

_CONTROL_FLAGS = ((0, 1), (1, 0), (1, 1))  # (c_l, c_r); (0, 0) cannot occur


def conf(t, i, jmin, jmax, cl, cr) -> str:
    return f"conf_{t}_{i}_{jmin}_{jmax}_{cl}_{cr}"


def build_bc_advanced_model(instance: Instance, N: int,
                            options: MilpBuildOptions = MilpBuildOptions()) -> MilpModel:
    if not instance.is_bc:
        raise InstanceError("the advanced BC model needs bounded-confidence dynamics")
    _check_options(instance, options)
    left, right = instance.left, instance.right
    if left == 0 or right == 1:
        raise PerturbationUndefined("the advanced model's perturbed objective needs l > 0 and r < 1")
    if N < 1:
        raise ValueError("the advanced model needs N >= 1")
    n, eps, far = instance.n, instance.epsilon, instance.epsilon + options.eps_hat
    m = MilpModel(f"bc_advanced_n{n}_N{N}",
                  info={"kind": "bc-advanced", "N": N, "n": n, "eps_hat": options.eps_hat})
    _state_vars(m, instance, N)
    I = range(1, n + 1)

    confs: dict[tuple[int, int], list[tuple[int, int, int, int]]] = {}
    for t in range(N):
        for i in I:
            confs[t, i] = [(jmin, jmax, cl, cr) for jmin in range(1, i + 1) for jmax in range(i, n + 1)
                           for cl, cr in _CONTROL_FLAGS]
            for key in confs[t, i]:
                m.add_var(conf(t, i, *key), BINARY, stage=t)
        for i in I:
            m.add_var(f"q_{t}_{i}", BINARY, stage=t)
            for j in I:
                if i < j:
                    m.add_var(f"p_{t}_{i}_{j}", BINARY, stage=t)
    for jmin in I:
        for jmax in range(jmin, n + 1):
            m.add_var(f"conv_{jmin}_{jmax}", BINARY, stage=N)
    for t in range(1, N + 1):
        for i in I:
            m.add_var(f"dl_{t}_{i}", lb=0, ub=left, stage=t)
            m.add_var(f"dr_{t}_{i}", lb=0, ub=1 - right, stage=t)
    m.add_var("obj_offset", lb=1, ub=1)

    for t in range(N):
        u = x(t, 0)
        for i in I:
            xi = x(t, i)
            cs = confs[t, i]
            m.add(f"assign_{t}_{i}", [(conf(t, i, *k), ONE) for k in cs], "=", 1)
            for jmin in range(1, i + 1):
                g = Guard.of(*(conf(t, i, *k) for k in cs if k[0] == jmin))
                if jmin < i:
                    m.add_vif(f"vbl_{t}_{i}_{jmin}", g, [(xi, ONE), (x(t, jmin), -ONE)], "<=", eps)
                if jmin > 1:
                    m.add_vif(f"vel_{t}_{i}_{jmin}", g, [(xi, ONE), (x(t, jmin - 1), -ONE)], ">=", far)
            for jmax in range(i, n + 1):
                g = Guard.of(*(conf(t, i, *k) for k in cs if k[1] == jmax))
                if jmax > i:
                    m.add_vif(f"vbr_{t}_{i}_{jmax}", g, [(x(t, jmax), ONE), (xi, -ONE)], "<=", eps)
                if jmax < n:
                    m.add_vif(f"ver_{t}_{i}_{jmax}", g, [(x(t, jmax + 1), ONE), (xi, -ONE)], ">=", far)
            g_cl1 = Guard.of(*(conf(t, i, *k) for k in cs if k[2] == 1))
            g_cr1 = Guard.of(*(conf(t, i, *k) for k in cs if k[3] == 1))
            g_cl0 = Guard.of(*(conf(t, i, *k) for k in cs if k[2] == 0))
            g_cr0 = Guard.of(*(conf(t, i, *k) for k in cs if k[3] == 0))
            m.add_vif(f"cbl_{t}_{i}", g_cl1, [(xi, ONE), (u, -ONE)], "<=", eps)
            m.add_vif(f"cbr_{t}_{i}", g_cr1, [(u, ONE), (xi, -ONE)], "<=", eps)
            m.add_vif(f"cel_{t}_{i}", g_cl0, [(xi, ONE), (u, -ONE)], ">=", far)
            m.add_vif(f"cer_{t}_{i}", g_cr0, [(u, ONE), (xi, -ONE)], ">=", far)
            # dynamics: mean over the configured block, plus the control when it is inside
            for jmin, jmax, cl, cr in cs:
                with_control = cl and cr
                k = jmax - jmin + 1 + with_control
                terms = [(x(t + 1, i), ONE)] + [(x(t, j), -ONE / k) for j in range(jmin, jmax + 1)]
                if with_control:
                    terms.append((u, -ONE / k))
                m.add_vif(f"dyn_{t}_{i}_{jmin}_{jmax}_{cl}_{cr}", Guard.of(conf(t, i, jmin, jmax, cl, cr)),
                          terms, "=", 0)
            m.add(f"ctrlrel_{t}_{i}", [(f"q_{t}_{i}", ONE)] + [(conf(t, i, *k), -ONE) for k in cs if k[2] and k[3]],
                  "=", 0)
        for i in I:
            for j in I:
                if i < j:
                    p = f"p_{t}_{i}_{j}"
                    m.add(f"sym1_{t}_{i}_{j}", [(p, ONE)] + [(conf(t, i, *k), -ONE) for k in confs[t, i] if k[1] >= j],
                          "=", 0)
                    m.add(f"sym2_{t}_{i}_{j}", [(p, ONE)] + [(conf(t, j, *k), -ONE) for k in confs[t, j] if k[0] <= i],
                          "=", 0)

    convs = [(jmin, jmax) for jmin in I for jmax in range(jmin, n + 1)]
    m.add("conv_assign", [(f"conv_{a}_{b}", ONE) for a, b in convs], "<=", 1)
    for jmin in I:
        g = Guard.of(*(f"conv_{a}_{b}" for a, b in convs if a == jmin))
        m.add_vif(f"convl_{jmin}", g, [(x(N, jmin), ONE)], ">=", left)
        for i in range(jmin, n + 1):
            m.add_vif(f"dlzero_{jmin}_{i}", g, [(f"dl_{N}_{i}", ONE)], "<=", 0)
    for jmax in I:
        g = Guard.of(*(f"conv_{a}_{b}" for a, b in convs if b == jmax))
        m.add_vif(f"convr_{jmax}", g, [(x(N, jmax), ONE)], "<=", right)
        for i in range(1, jmax + 1):
            m.add_vif(f"drzero_{jmax}_{i}", g, [(f"dr_{N}_{i}", ONE)], "<=", 0)

    for t in range(1, N + 1):
        for i in I:
            m.add(f"dldef_{t}_{i}", [(f"dl_{t}_{i}", ONE), (x(t, i), ONE)], ">=", left)
            m.add(f"drdef_{t}_{i}", [(f"dr_{t}_{i}", ONE), (x(t, i), -ONE)], ">=", -right)
            step = [(x(t, i), ONE), (x(t - 1, i), -ONE)]
            m.add(f"reachr_{t}_{i}", step, "<=", Fraction(n - i + 1, n - i + 2) * eps)
            m.add(f"reachl_{t}_{i}", step, ">=", -Fraction(i, i + 1) * eps)
            for j in I:
                if i < j:
                    m.add(f"mono_{t}_{i}_{j}", [(x(t, i), ONE), (x(t, j), -ONE)], "<=", 0)
    if options.symmetry_break:
        m.add("symbreak", [(x(0, 0), ONE)], "<=", Fraction(1, 2))

    obj = [(f"conv_{a}_{b}", Fraction(b - a + 1)) for a, b in convs] + [("obj_offset", ONE)]
    wl = ONE / (N * left * n)
    wr = ONE / (N * (1 - right) * n)
    for t in range(1, N + 1):
        for i in I:
            obj += [(f"dl_{t}_{i}", -wl), (f"dr_{t}_{i}", -wr)]
    m.set_objective(obj)
    return m


def bc_advanced_assignment(instance: Instance, trajectory: Trajectory) -> dict[str, Fraction]:
    N, n, eps = trajectory.stages, instance.n, instance.epsilon
    left, right = instance.left, instance.right
    a = _state_assignment(trajectory, N)
    I = range(1, n + 1)
    for t in range(N):
        state, u = trajectory.states[t], trajectory.controls[t]
        for i in I:
            xi = state[i - 1]
            members = [j for j in I if abs(state[j - 1] - xi) <= eps]
            jmin, jmax = min(members), max(members)
            cl, cr = int(u >= xi - eps), int(u <= xi + eps)
            for key in [(a_, b_, c_, d_) for a_ in range(1, i + 1) for b_ in range(i, n + 1)
                        for c_, d_ in _CONTROL_FLAGS]:
                a[conf(t, i, *key)] = Fraction(int(key == (jmin, jmax, cl, cr)))
            a[f"q_{t}_{i}"] = Fraction(cl & cr)
            for j in I:
                if i < j:
                    a[f"p_{t}_{i}_{j}"] = Fraction(int(abs(state[j - 1] - xi) <= eps))
    convinced = [i for i, xi in enumerate(trajectory.final, start=1) if left <= xi <= right]
    for jmin in I:
        for jmax in range(jmin, n + 1):
            a[f"conv_{jmin}_{jmax}"] = Fraction(int(bool(convinced) and (jmin, jmax) == (convinced[0], convinced[-1])))
    for t in range(1, N + 1):
        for i, xi in enumerate(trajectory.states[t], start=1):
            a[f"dl_{t}_{i}"] = max(Fraction(0), left - xi)
            a[f"dr_{t}_{i}"] = max(Fraction(0), xi - right)
    a["obj_offset"] = ONE
    return a


BUILDERS = {
    "dg": lambda inst, N, opts: build_dg_model(inst, N),
    "bc-basic": build_bc_basic_model,
    "bc-advanced": build_bc_advanced_model,
}


def build_model(kind: str, instance: Instance, N: int, options: MilpBuildOptions = MilpBuildOptions()) -> MilpModel:
    try:
        builder = BUILDERS[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(BUILDERS)}") from None
    return builder(instance, N, options)
