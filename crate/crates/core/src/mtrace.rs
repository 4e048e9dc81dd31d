//! Modified traces on projective modules and the renormalized evaluation
//! of admissible closed diagrams.
//!
//! The trace on the regular module is t_H(f) = λ(g·f(1)). For other
//! projectives it is transported through a factorization of the identity
//! id_V = Σ c_ij f'_j ∘ f_i with f_i : V → H, f'_j : H → V, giving
//! t_V(f) = Σ c_ij t_H(f_i ∘ f ∘ f'_j). For V = H ⊗ W the factorization
//! is the explicit free-module splitting x⊗m ↦ Σ x₍₁₎ ⊗ S(x₍₂₎)m, whose
//! inverse is x⊗m ↦ Σ x₍₁₎ ⊗ x₍₂₎m; this avoids any linear solving.

use crate::cyclo::CycScalar;
use crate::diagrams::{analyze, resolve_rep, ColorSpec, Diagram, DiagramError};
use crate::eval::{EvalEnv, EvalError};
use crate::hopf::{Elem, HopfData};
use crate::linalg::SparseVec;
use crate::reps::{
    id_factorization, is_projective, mat_mul, IdFactorization, ModMap, Rep, SparseMat,
};
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

type Cyc = CycScalar;

#[derive(Debug, Clone, Error)]
pub enum TraceError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error("module is not projective; modified trace undefined")]
    NotProjective,
    #[error("no factorization of the identity found")]
    NoFactorization,
    #[error("no admissible blue edge to cut")]
    NoAdmissibleEdge,
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// How to compute the modified trace on a module.
pub enum TraceScheme {
    /// The regular module itself.
    Regular,
    /// H ⊗ W with the stated complement W.
    FreeOver(Rep<Cyc>),
    /// A found factorization of the identity through copies of H.
    Factorized(IdFactorization<Cyc>),
}

/// Partial quantum trace over the right factor W of f : V⊗W → V⊗W.
pub fn partial_trace_right(
    env: &mut EvalEnv<'_>,
    f: &ModMap<Cyc>,
    dv: usize,
    w: &Rep<Cyc>,
) -> ModMap<Cyc> {
    let dw = w.dim;
    assert_eq!(f.src_dim, dv * dw, "partial trace shape");
    let gw = w.act(&env.derived.pivot_g.clone());
    let mut cols: SparseMat<Cyc> = vec![SparseVec::new(); dv];
    for v in 0..dv {
        let mut acc: SparseVec<Cyc> = SparseVec::new();
        for wi in 0..dw {
            let col = &f.mat[v * dw + wi];
            for (&idx, c) in col {
                let (v2, w2) = (idx / dw, idx % dw);
                // weight by ev_right ∘ coev_left: (ρ_W(g))_{w_in, w_out}.
                if let Some(gcoef) = gw[w2].get(&wi) {
                    let e = acc.entry(v2).or_insert_with(Cyc::zero);
                    *e = e.clone() + c.clone() * gcoef.clone();
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        cols[v] = acc;
    }
    ModMap {
        src_dim: dv,
        dst_dim: dv,
        mat: cols,
    }
}

/// Partial quantum trace over the left factor W of f : W⊗V → W⊗V.
pub fn partial_trace_left(
    env: &mut EvalEnv<'_>,
    f: &ModMap<Cyc>,
    w: &Rep<Cyc>,
    dv: usize,
) -> ModMap<Cyc> {
    let dw = w.dim;
    assert_eq!(f.src_dim, dw * dv, "partial trace shape");
    let gw_inv = w.act(&env.derived.pivot_g_inv.clone());
    let mut cols: SparseMat<Cyc> = vec![SparseVec::new(); dv];
    for v in 0..dv {
        let mut acc: SparseVec<Cyc> = SparseVec::new();
        for wi in 0..dw {
            let col = &f.mat[wi * dv + v];
            for (&idx, c) in col {
                let (w2, v2) = (idx / dv, idx % dv);
                if let Some(gcoef) = gw_inv[w2].get(&wi) {
                    let e = acc.entry(v2).or_insert_with(Cyc::zero);
                    *e = e.clone() + c.clone() * gcoef.clone();
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        cols[v] = acc;
    }
    ModMap {
        src_dim: dv,
        dst_dim: dv,
        mat: cols,
    }
}

/// The free-module splitting of H ⊗ W: maps u_k : H → H⊗W and
/// p_k : H⊗W → H with Σ_k u_k ∘ p_k = id.
pub fn free_splitting(h: &HopfData<Cyc>, w: &Rep<Cyc>) -> (Vec<ModMap<Cyc>>, Vec<ModMap<Cyc>>) {
    let n = h.dim;
    let dw = w.dim;
    let mut ups: Vec<ModMap<Cyc>> = Vec::with_capacity(dw);
    let mut downs: Vec<ModMap<Cyc>> = Vec::with_capacity(dw);
    // Precompute coproducts and antipode actions of basis elements.
    let coprods: Vec<SparseVec<Cyc>> = (0..n)
        .map(|x| {
            let mut e: Elem<Cyc> = Elem::new();
            e.insert(x, Cyc::one());
            h.coprod_elem(&e)
        })
        .collect();
    let s_act: Vec<SparseMat<Cyc>> = (0..n)
        .map(|l| {
            let mut e: Elem<Cyc> = Elem::new();
            e.insert(l, Cyc::one());
            w.act(&h.antipode_elem(&e))
        })
        .collect();
    for k in 0..dw {
        // u_k(e_x) = Σ x₍₁₎ ⊗ x₍₂₎·m_k.
        let mut umat: SparseMat<Cyc> = vec![SparseVec::new(); n];
        for x in 0..n {
            let col = &mut umat[x];
            for (&key, c) in &coprods[x] {
                let (j, l) = (key / n, key % n);
                for (&m2, wc) in &w.mats[l][k] {
                    let e = col.entry(j * dw + m2).or_insert_with(Cyc::zero);
                    *e = e.clone() + c.clone() * wc.clone();
                }
            }
            col.retain(|_, v| !v.is_zero());
        }
        ups.push(ModMap {
            src_dim: n,
            dst_dim: n * dw,
            mat: umat,
        });
        // p_k(e_x ⊗ m) = Σ (S(x₍₂₎)·m)_k · x₍₁₎.
        let mut pmat: SparseMat<Cyc> = vec![SparseVec::new(); n * dw];
        for x in 0..n {
            for m in 0..dw {
                let col = &mut pmat[x * dw + m];
                for (&key, c) in &coprods[x] {
                    let (j, l) = (key / n, key % n);
                    if let Some(sc) = s_act[l][m].get(&k) {
                        let e = col.entry(j).or_insert_with(Cyc::zero);
                        *e = e.clone() + c.clone() * sc.clone();
                    }
                }
                col.retain(|_, v| !v.is_zero());
            }
        }
        downs.push(ModMap {
            src_dim: n * dw,
            dst_dim: n,
            mat: pmat,
        });
    }
    (ups, downs)
}

/// Choose a trace scheme for the module named by `color`.
pub fn scheme_for_color(
    env: &mut EvalEnv<'_>,
    colors: &BTreeMap<String, ColorSpec>,
    color: &str,
) -> Result<TraceScheme, TraceError> {
    if color == "H" {
        return Ok(TraceScheme::Regular);
    }
    match colors.get(color) {
        Some(ColorSpec::Regular) => Ok(TraceScheme::Regular),
        Some(ColorSpec::Tensor(names)) if !names.is_empty() && names[0] == "H" => {
            let mut acc: Option<Rep<Cyc>> = None;
            for nm in &names[1..] {
                let r = resolve_rep(env.h, colors, nm)?;
                acc = Some(match acc {
                    None => r,
                    Some(a) => crate::reps::tensor_rep(env.h, &a, &r),
                });
            }
            match acc {
                Some(w) => Ok(TraceScheme::FreeOver(w)),
                None => Ok(TraceScheme::Regular),
            }
        }
        _ => {
            let rep = resolve_rep(env.h, colors, color)?;
            if !is_projective(env.h, &rep) {
                return Err(TraceError::NotProjective);
            }
            id_factorization(env.h, &rep)
                .map(TraceScheme::Factorized)
                .ok_or(TraceError::NoFactorization)
        }
    }
}

/// t_H(f) = λ(g · f(1)).
pub fn trace_regular(env: &mut EvalEnv<'_>, f: &ModMap<Cyc>) -> Cyc {
    let unit = env.unit_elem();
    let lam_g = env.lambda_shift(1);
    let mut out = env.zero();
    for (i, u) in &unit {
        for (&idx, c) in &f.mat[*i] {
            if !lam_g[idx].is_zero() {
                out = out + lam_g[idx].clone() * c.clone() * u.clone();
            }
        }
    }
    out
}

/// Modified trace of an equivariant endomorphism under the given scheme.
pub fn modified_trace(
    env: &mut EvalEnv<'_>,
    scheme: &TraceScheme,
    f: &ModMap<Cyc>,
) -> Result<Cyc, TraceError> {
    match scheme {
        TraceScheme::Regular => Ok(trace_regular(env, f)),
        TraceScheme::FreeOver(w) => {
            let (ups, downs) = free_splitting(env.h, w);
            let mut out = env.zero();
            for (u, p) in ups.iter().zip(&downs) {
                let comp = p.compose(&f.compose(u));
                out = out + trace_regular(env, &comp);
            }
            Ok(out)
        }
        TraceScheme::Factorized(fact) => {
            let mut out = env.zero();
            for ((i, j), c) in &fact.coeffs {
                if c.is_zero() {
                    continue;
                }
                let comp = fact.into_h[*i].compose(&f.compose(&fact.from_h[*j]));
                out = out + trace_regular(env, &comp) * c.clone();
            }
            Ok(out)
        }
    }
}

/// The insertion matrix realizing the modified-trace cut of a blue edge
/// whose closure carries `net` right caps over right cups:
/// M = Σ c_ij f'_j(1) ⊗ (λ(g · f_i(g^{−net} ·))).
pub fn cut_matrix(
    env: &mut EvalEnv<'_>,
    scheme: &TraceScheme,
    v: &Rep<Cyc>,
    net: i64,
) -> Result<SparseMat<Cyc>, TraceError> {
    let dv = v.dim;
    let g_shift = v.act(&env.g_pow(-net));
    let lam_g = env.lambda_shift(1);
    let unit = env.unit_elem();
    let pairs: Vec<(ModMap<Cyc>, ModMap<Cyc>, Cyc)> = match scheme {
        TraceScheme::Regular => {
            if dv != env.h.dim {
                return Err(TraceError::Shape("regular scheme on non-regular module".into()));
            }
            vec![(ModMap::identity(dv), ModMap::identity(dv), Cyc::one())]
        }
        TraceScheme::FreeOver(w) => {
            let (ups, downs) = free_splitting(env.h, w);
            ups.into_iter()
                .zip(downs)
                .map(|(u, p)| (p, u, Cyc::one()))
                .collect()
        }
        TraceScheme::Factorized(fact) => fact
            .coeffs
            .iter()
            .map(|((i, j), c)| (fact.into_h[*i].clone(), fact.from_h[*j].clone(), c.clone()))
            .collect(),
    };
    let mut cols: SparseMat<Cyc> = vec![SparseVec::new(); dv];
    for (into_h, from_h, coef) in &pairs {
        if coef.is_zero() {
            continue;
        }
        // Column vector f'_j(1) in V.
        let mut fj1: SparseVec<Cyc> = SparseVec::new();
        for (i, u) in &unit {
            for (&idx, c) in &from_h.mat[*i] {
                let e = fj1.entry(idx).or_insert_with(Cyc::zero);
                *e = e.clone() + c.clone() * u.clone();
            }
        }
        fj1.retain(|_, c| !c.is_zero());
        // Row covector y ↦ λ(g · f_i(g^{−net} y)).
        let fi_shift = mat_mul(&into_h.mat, &g_shift);
        for (y, col) in fi_shift.iter().enumerate() {
            let mut r = env.zero();
            for (&idx, c) in col {
                if !lam_g[idx].is_zero() {
                    r = r + lam_g[idx].clone() * c.clone();
                }
            }
            if r.is_zero() {
                continue;
            }
            let r = r * coef.clone();
            for (&i2, c2) in &fj1 {
                let e = cols[y].entry(i2).or_insert_with(Cyc::zero);
                *e = e.clone() + r.clone() * c2.clone();
            }
        }
    }
    for c in cols.iter_mut() {
        c.retain(|_, v| !v.is_zero());
    }
    Ok(cols)
}

/// Renormalized evaluation F′_λ: cut an admissible (projective) blue edge
/// with the modified-trace insertion and contract.
pub fn renormalized_eval(env: &mut EvalEnv<'_>, d: &Diagram) -> Result<Cyc, TraceError> {
    let a = analyze(d)?;
    for (idx, e) in a.edges.iter().enumerate() {
        if e.chrome != crate::diagrams::Chrome::Blue || !e.closed || e.up_point.is_none() {
            continue;
        }
        let scheme = match scheme_for_color(env, &d.colors, &e.color) {
            Ok(s) => s,
            Err(TraceError::NotProjective) => continue,
            Err(err) => return Err(err),
        };
        let rep = resolve_rep(env.h, &d.colors, &e.color)?;
        if matches!(scheme, TraceScheme::Factorized(_)) && !is_projective(env.h, &rep) {
            continue;
        }
        let m = cut_matrix(env, &scheme, &rep, e.net_right)?;
        return Ok(env.eval_closed_with_cut(d, idx, &m)?);
    }
    Err(TraceError::NoAdmissibleEdge)
}

/// Renormalized evaluation cutting a specific edge (for independence tests).
pub fn renormalized_eval_at(
    env: &mut EvalEnv<'_>,
    d: &Diagram,
    edge: usize,
) -> Result<Cyc, TraceError> {
    let a = analyze(d)?;
    let e = &a.edges[edge];
    let scheme = scheme_for_color(env, &d.colors, &e.color)?;
    let rep = resolve_rep(env.h, &d.colors, &e.color)?;
    let m = cut_matrix(env, &scheme, &rep, e.net_right)?;
    Ok(env.eval_closed_with_cut(d, edge, &m)?)
}

#[cfg(test)]
mod tests {
    use crate::scalar::Field;
    use num_traits::Zero;
    use super::*;
    use crate::diagrams::{decorated_unknot, endo_coupon, Chrome, MorphismSpec, Piece, Point};
    use crate::qgroups::build_small_quantum_sl2;
    use crate::reps::{dual_coadjoint_x, mat_identity, regular_rep, tensor_rep};
    use num_traits::One;

    fn lambda_eps_map(env: &EvalEnv<'_>) -> ModMap<Cyc> {
        let n = env.h.dim;
        let mat: SparseMat<Cyc> = env
            .h
            .counit
            .iter()
            .map(|c| {
                let mut col = SparseVec::new();
                if !c.is_zero() {
                    for (i, lc) in &env.derived.cointegral {
                        col.insert(*i, lc.clone() * c.clone());
                    }
                }
                col
            })
            .collect();
        ModMap {
            src_dim: n,
            dst_dim: n,
            mat,
        }
    }

    #[test]
    fn trace_normalization_and_vanishing() {
        let alg = build_small_quantum_sl2(3).unwrap();
        let mut env = EvalEnv::new(&alg.hopf, Some(&alg)).unwrap();
        let f = lambda_eps_map(&env);
        let t = trace_regular(&mut env, &f);
        assert!(t.is_one(), "t_H(Lambda . eps) = lambda(g Lambda) = 1, got {}", t.render());
        let id = ModMap::identity(alg.hopf.dim);
        assert!(trace_regular(&mut env, &id).is_zero(), "t_H(id) = lambda(g) = 0");
    }

    #[test]
    fn free_splitting_recomposes_identity() {
        let alg = build_small_quantum_sl2(3).unwrap();
        let h = &alg.hopf;
        let x = dual_coadjoint_x(h).unwrap();
        let (ups, downs) = free_splitting(h, &x);
        let n = h.dim * x.dim;
        let mut acc: SparseMat<Cyc> = vec![SparseVec::new(); n];
        for (u, p) in ups.iter().zip(&downs) {
            let comp = u.compose(p);
            for (c, col) in comp.mat.iter().enumerate() {
                for (&r, v) in col {
                    let e = acc[c].entry(r).or_insert_with(Cyc::zero);
                    *e = e.clone() + v.clone();
                }
            }
        }
        for c in acc.iter_mut() {
            c.retain(|_, v| !v.is_zero());
        }
        assert_eq!(acc, mat_identity::<Cyc>(n), "sum u_k p_k = id on H (x) X");
    }

    fn right_mult_map(h: &HopfData<Cyc>, z: &Elem<Cyc>) -> ModMap<Cyc> {
        let n = h.dim;
        let mat: SparseMat<Cyc> = (0..n)
            .map(|j| {
                let mut ej: Elem<Cyc> = Elem::new();
                ej.insert(j, Cyc::one());
                h.mul(&ej, z)
            })
            .collect();
        ModMap {
            src_dim: n,
            dst_dim: n,
            mat,
        }
    }

    fn kron_map(a: &ModMap<Cyc>, b: &ModMap<Cyc>) -> ModMap<Cyc> {
        ModMap {
            src_dim: a.src_dim * b.src_dim,
            dst_dim: a.dst_dim * b.dst_dim,
            mat: crate::reps::mat_kron(&a.mat, &b.mat, b.dst_dim),
        }
    }

    #[test]
    fn partial_trace_compatibility() {
        use rand::{Rng, SeedableRng};
        let alg = build_small_quantum_sl2(3).unwrap();
        let h = &alg.hopf;
        let mut env = EvalEnv::new(h, Some(&alg)).unwrap();
        let reg = regular_rep(h);
        let hh = tensor_rep(h, &reg, &reg);
        let scheme_hh = TraceScheme::FreeOver(reg.clone());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            // Random equivariant endomorphism of H⊗H: a sum of right
            // multiplications on each factor.
            let mut z1: Elem<Cyc> = Elem::new();
            let mut z2: Elem<Cyc> = Elem::new();
            for _ in 0..2 {
                z1.insert(rng.gen_range(0..h.dim), Cyc::from_i64_of(1, rng.gen_range(-2..3)));
                z2.insert(rng.gen_range(0..h.dim), Cyc::from_i64_of(1, rng.gen_range(-2..3)));
            }
            let f = kron_map(&right_mult_map(h, &z1), &right_mult_map(h, &z2));
            let lhs = modified_trace(&mut env, &scheme_hh, &f).unwrap();
            let ptr = partial_trace_right(&mut env, &f, h.dim, &reg);
            let rhs = trace_regular(&mut env, &ptr);
            assert_eq!(lhs, rhs, "t_HH(f) = t_H(ptr_r f)");
            let ptl = partial_trace_left(&mut env, &f, &reg, h.dim);
            let rhs_l = trace_regular(&mut env, &ptl);
            assert_eq!(lhs, rhs_l, "t_HH(f) = t_H(ptr_l f)");
        }
        let _ = hh;
    }

    #[test]
    fn cyclicity() {
        let alg = build_small_quantum_sl2(3).unwrap();
        let h = &alg.hopf;
        let mut env = EvalEnv::new(h, Some(&alg)).unwrap();
        let reg = regular_rep(h);
        // On H: right multiplications by non-commuting elements.
        let ze = alg.monomial(1, 0, 0);
        let zf = alg.monomial(0, 1, 1);
        let f = right_mult_map(h, &ze);
        let g = right_mult_map(h, &zf);
        let fg = f.compose(&g);
        let gf = g.compose(&f);
        assert_ne!(fg.mat, gf.mat, "test maps do not commute");
        let tfg = trace_regular(&mut env, &fg);
        let tgf = trace_regular(&mut env, &gf);
        assert_eq!(tfg, tgf, "cyclicity on H");
        // On H ⊗ X: the braiding monodromy against R_x ⊗ id.
        let x = dual_coadjoint_x(h).unwrap();
        let c1 = env.crossing(&reg, &x, true).unwrap();
        let c2 = env.crossing(&x, &reg, true).unwrap();
        let mono = ModMap {
            src_dim: reg.dim * x.dim,
            dst_dim: reg.dim * x.dim,
            mat: mat_mul(&c2, &c1),
        };
        let rx = kron_map(&right_mult_map(h, &ze), &ModMap::identity(x.dim));
        let a = mono.compose(&rx);
        let b = rx.compose(&mono);
        let scheme = TraceScheme::FreeOver(x.clone());
        let ta = modified_trace(&mut env, &scheme, &a).unwrap();
        let tb = modified_trace(&mut env, &scheme, &b).unwrap();
        assert_eq!(ta, tb, "cyclicity on H (x) X");
    }

    #[test]
    fn renormalized_unknot_with_integration_coupon() {
        let alg = build_small_quantum_sl2(3).unwrap();
        let mut env = EvalEnv::new(&alg.hopf, Some(&alg)).unwrap();
        let d = decorated_unknot(
            "H",
            "c",
            endo_coupon("H", MorphismSpec::Builtin("lambda_eps".into())),
        );
        let v = renormalized_eval(&mut env, &d).unwrap();
        assert!(v.is_one(), "F'(blue unknot with Lambda.eps coupon) = t_H(Lambda.eps) = 1, got {}", v.render());
    }

    #[test]
    fn cut_edge_independence() {
        // One blue circle carrying two coupons: cutting either edge of the
        // circle gives the same renormalized value.
        let alg = build_small_quantum_sl2(3).unwrap();
        let mut env = EvalEnv::new(&alg.hopf, Some(&alg)).unwrap();
        let p = Point::blue("H");
        let mut coupons = BTreeMap::new();
        coupons.insert("a".to_string(), endo_coupon("H", MorphismSpec::Lz("K".into())));
        coupons.insert(
            "b".to_string(),
            endo_coupon("H", MorphismSpec::Builtin("lambda_eps".into())),
        );
        let d = Diagram {
            colors: [("H".to_string(), ColorSpec::Regular)].into_iter().collect(),
            bottom: vec![],
            top: vec![],
            slices: vec![
                vec![Piece::CupLeft(p)],
                vec![Piece::Coupon { label: "a".into() }, Piece::Id],
                vec![Piece::Coupon { label: "b".into() }, Piece::Id],
                vec![Piece::CapRight],
            ],
            coupons,
        };
        let a = analyze(&d).unwrap();
        let blue_edges: Vec<usize> = a
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.chrome == Chrome::Blue && e.up_point.is_some())
            .map(|(i, _)| i)
            .collect();
        assert!(blue_edges.len() >= 2, "expected at least two blue edges, got {}", blue_edges.len());
        let vals: Vec<Cyc> = blue_edges
            .iter()
            .map(|&e| renormalized_eval_at(&mut env, &d, e).unwrap())
            .collect();
        for v in &vals[1..] {
            assert_eq!(v, &vals[0], "cut-edge independence");
        }
    }

    #[test]
    fn red_turns_blue() {
        let alg = build_small_quantum_sl2(3).unwrap();
        let mut env = EvalEnv::new(&alg.hopf, Some(&alg)).unwrap();
        for framing in [0i64, 1, -1] {
            let red = crate::diagrams::unknot(Chrome::Red, "H", framing);
            let direct = env.eval_closed(&red).unwrap();
            let a = analyze(&red).unwrap();
            let cyc = crate::diagrams::smoothing(&a).cycles[0];
            let blue = env.turn_red_cycle_blue(&red, cyc).unwrap();
            let b = analyze(&blue).unwrap();
            assert!(crate::diagrams::smoothing(&b).cycles.is_empty(), "no red cycles remain");
            let via_blue = env.eval_closed(&blue).unwrap();
            assert_eq!(direct, via_blue, "red cycle equals blue cycle with integration coupon");
        }
    }
}
