//! State-vector contraction of bichrome diagrams.
//!
//! Strands are interpreted as modules (a downward strand carries the dual
//! module), pieces as module maps: crossings act by the R-matrix followed
//! by the flip, caps/cups by the pivotal duality morphisms, twists by
//! central ribbon beads, coupons by their declared morphisms. Closed red
//! cycles are integrated: each is closed by the rank-one insertion
//! y ↦ λ(g^{−net} y)·1_H placed just above its lowest cup, where `net` is
//! the cycle's net count of right caps over right cups (this cancels the
//! pivotal factors those caps contribute, so the result is the integral of
//! the cycle's holonomy; see the ±1-framed unknot calibration tests).

use crate::cyclo::CycScalar;
use crate::diagrams::{
    analyze, resolve_rep, smoothing, Analysis, Chrome, CouponSpec, Diagram, DiagramError, Dir,
    MorphismSpec, Piece, Point,
};
use crate::hopf::{Elem, HopfData, HopfError, RibbonDerived};
use crate::linalg::SparseVec;
use crate::qgroups::{normal_order, parse_element, QGroupAlgebra, QGroupError};
use crate::reps::{dual_rep, duality_morphisms, tensor_rep, trivial_rep, ModMap, Rep, SparseMat};
use crate::scalar::Rat;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::str::FromStr;
use thiserror::Error;

type Cyc = CycScalar;

pub const DEFAULT_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, Error)]
pub enum EvalError {
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Hopf(#[from] HopfError),
    #[error(transparent)]
    Element(#[from] QGroupError),
    #[error("state dimension {need} exceeds budget {limit}")]
    Budget { need: usize, limit: usize },
    #[error("diagram is not closed")]
    NotClosed,
    #[error("algebra has no R-matrix; crossings are not evaluable")]
    NoRMatrix,
    #[error("coupon {0}: {1}")]
    Coupon(String, String),
    #[error("element expressions need a built-in algebra designator")]
    NoElementParser,
    #[error("edge {0} has no interior point to cut at")]
    NoCutPoint(usize),
    #[error("evaluated map fails equivariance")]
    NotEquivariant,
}

/// Evaluation context: algebra, derived ribbon data, caches, budget.
pub struct EvalEnv<'a> {
    pub h: &'a HopfData<Cyc>,
    pub alg: Option<&'a QGroupAlgebra>,
    pub derived: RibbonDerived<Cyc>,
    pub budget: usize,
    pub verify_equivariance: bool,
    order: u64,
    r_inv: SparseVec<Cyc>,
    rep_cache: BTreeMap<String, Rep<Cyc>>,
    cross_cache: BTreeMap<(String, String, bool), SparseMat<Cyc>>,
    g_pows: BTreeMap<i64, Elem<Cyc>>,
}

pub fn budget_from_env() -> usize {
    std::env::var("HENNINGS_BUDGET")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

/// R⁻¹ = (S ⊗ id)(R), stored over pair keys j·n+k.
pub fn r_matrix_inverse(h: &HopfData<Cyc>) -> Result<SparseVec<Cyc>, EvalError> {
    let r = h.rmatrix.as_ref().ok_or(EvalError::NoRMatrix)?;
    let n = h.dim;
    let mut out: SparseVec<Cyc> = SparseVec::new();
    for (key, c) in r {
        let (j, k) = (key / n, key % n);
        let mut ej: Elem<Cyc> = Elem::new();
        ej.insert(j, Cyc::one());
        let sj = h.antipode_elem(&ej);
        for (j2, c2) in &sj {
            let e = out.entry(j2 * n + k).or_insert_with(Cyc::zero);
            *e = e.clone() + c.clone() * c2.clone();
        }
    }
    out.retain(|_, c| !c.is_zero());
    Ok(out)
}

impl<'a> EvalEnv<'a> {
    pub fn new(h: &'a HopfData<Cyc>, alg: Option<&'a QGroupAlgebra>) -> Result<Self, EvalError> {
        let pin = alg.map(|a| (a.lambda_pin_index, Cyc::one()));
        let derived = h.derive_ribbon(pin)?;
        let order = derived
            .lambda
            .iter()
            .find(|c| !c.is_zero())
            .map(|c| c.order())
            .unwrap_or(1);
        let r_inv = if h.rmatrix.is_some() {
            r_matrix_inverse(h)?
        } else {
            SparseVec::new()
        };
        Ok(EvalEnv {
            h,
            alg,
            derived,
            budget: budget_from_env(),
            verify_equivariance: false,
            order,
            r_inv,
            rep_cache: BTreeMap::new(),
            cross_cache: BTreeMap::new(),
            g_pows: BTreeMap::new(),
        })
    }

    pub fn zero(&self) -> Cyc {
        Cyc::zero_of(self.order)
    }

    pub fn unit_elem(&self) -> Elem<Cyc> {
        self.h
            .unit
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (i, c.clone()))
            .collect()
    }

    pub fn g_pow(&mut self, k: i64) -> Elem<Cyc> {
        if let Some(e) = self.g_pows.get(&k) {
            return e.clone();
        }
        let step = if k >= 0 {
            self.derived.pivot_g.clone()
        } else {
            self.derived.pivot_g_inv.clone()
        };
        let mut acc = self.unit_elem();
        for _ in 0..k.unsigned_abs() {
            acc = self.h.mul(&acc, &step);
        }
        self.g_pows.insert(k, acc.clone());
        acc
    }

    /// The covector y ↦ λ(g^k y) as a dense row.
    pub fn lambda_shift(&mut self, k: i64) -> Vec<Cyc> {
        let g = self.g_pow(k);
        (0..self.h.dim)
            .map(|j| {
                let mut ej: Elem<Cyc> = Elem::new();
                ej.insert(j, Cyc::one());
                let prod = self.h.mul(&g, &ej);
                HopfData::<Cyc>::pair_cov(&self.derived.lambda, &prod)
            })
            .collect()
    }

    /// Rank-one closure of a red cycle with the given net right count.
    /// The exponent 2 − net makes the braid-opened strand see a plain λ:
    /// the closure's own cap/cup contribute g^{net}, and the leftover g²
    /// absorbs the antipode picked up by beads on downward segments,
    /// through λ(g²x) = λ(S(x)).
    pub fn red_closure_matrix(&mut self, net: i64) -> SparseMat<Cyc> {
        let row = self.lambda_shift(2 - net);
        let unit = self.unit_elem();
        row.iter()
            .map(|c| {
                let mut col = SparseVec::new();
                if !c.is_zero() {
                    for (i, u) in &unit {
                        col.insert(*i, u.clone() * c.clone());
                    }
                }
                col
            })
            .collect()
    }

    fn object(&mut self, p: &Point, colors: &BTreeMap<String, crate::diagrams::ColorSpec>) -> Result<Rep<Cyc>, EvalError> {
        let key = match p.dir {
            Dir::Up => p.color.clone(),
            Dir::Down => format!("{}^*", p.color),
        };
        if let Some(r) = self.rep_cache.get(&key) {
            return Ok(r.clone());
        }
        let base = resolve_rep(self.h, colors, &p.color)?;
        let rep = match p.dir {
            Dir::Up => base,
            Dir::Down => dual_rep(self.h, &base),
        };
        self.rep_cache.insert(key, rep.clone());
        Ok(rep)
    }

    fn duality_of(
        &mut self,
        color: &str,
        colors: &BTreeMap<String, crate::diagrams::ColorSpec>,
    ) -> Result<crate::reps::Duality<Cyc>, EvalError> {
        let rep = self.object(&Point { dir: Dir::Up, chrome: Chrome::Blue, color: color.into() }, colors)?;
        let g = rep.act(&self.derived.pivot_g);
        let g_inv = rep.act(&self.derived.pivot_g_inv);
        Ok(duality_morphisms(&rep, &g, &g_inv))
    }

    /// The braiding A⊗B → B⊗A (or its inverse) in the given modules.
    pub fn crossing(
        &mut self,
        a: &Rep<Cyc>,
        b: &Rep<Cyc>,
        positive: bool,
    ) -> Result<SparseMat<Cyc>, EvalError> {
        let key = (a.tag.clone(), b.tag.clone(), positive);
        if let Some(m) = self.cross_cache.get(&key) {
            return Ok(m.clone());
        }
        let r = if positive {
            self.h.rmatrix.clone().ok_or(EvalError::NoRMatrix)?
        } else {
            self.r_inv.clone()
        };
        let n = self.h.dim;
        let (da, db) = (a.dim, b.dim);
        let mut cols: SparseMat<Cyc> = vec![SparseVec::new(); da * db];
        for ia in 0..da {
            for ib in 0..db {
                let col = &mut cols[ia * db + ib];
                for (key, c) in &r {
                    let (j, k) = (key / n, key % n);
                    // Positive: flip ∘ (ρA(e_j) ⊗ ρB(e_k)); negative:
                    // (ρB(e_j) ⊗ ρA(e_k)) ∘ flip. Both land in B ⊗ A.
                    let (ca, cb) = if positive {
                        (&a.mats[j][ia], &b.mats[k][ib])
                    } else {
                        (&a.mats[k][ia], &b.mats[j][ib])
                    };
                    for (&a2, va) in ca {
                        for (&b2, vb) in cb {
                            let idx = b2 * da + a2;
                            let e = col.entry(idx).or_insert_with(Cyc::zero);
                            *e = e.clone() + c.clone() * va.clone() * vb.clone();
                        }
                    }
                }
                col.retain(|_, v| !v.is_zero());
            }
        }
        self.cross_cache.insert(key, cols.clone());
        Ok(cols)
    }

    /// Materialize a coupon's matrix together with its leg dimensions.
    pub fn coupon_matrix(
        &mut self,
        label: &str,
        spec: &CouponSpec,
        colors: &BTreeMap<String, crate::diagrams::ColorSpec>,
    ) -> Result<(usize, usize, SparseMat<Cyc>), EvalError> {
        let mut din = 1usize;
        for p in &spec.inputs {
            din *= self.object(p, colors)?.dim;
        }
        let mut dout = 1usize;
        for p in &spec.outputs {
            dout *= self.object(p, colors)?.dim;
        }
        let n = self.h.dim;
        let mat = match &spec.morphism {
            MorphismSpec::Builtin(name) => match name.as_str() {
                "Lambda" => {
                    if din != 1 || dout != n {
                        return Err(EvalError::Coupon(label.into(), "Lambda is 0 -> 1 on H".into()));
                    }
                    vec![self.derived.cointegral.clone()]
                }
                "epsilon" => {
                    if din != n || dout != 1 {
                        return Err(EvalError::Coupon(label.into(), "epsilon is 1 -> 0 on H".into()));
                    }
                    self.h
                        .counit
                        .iter()
                        .map(|c| {
                            let mut col = SparseVec::new();
                            if !c.is_zero() {
                                col.insert(0, c.clone());
                            }
                            col
                        })
                        .collect()
                }
                "lambda_eps" => {
                    if din != n || dout != n {
                        return Err(EvalError::Coupon(label.into(), "lambda_eps is 1 -> 1 on H".into()));
                    }
                    self.h
                        .counit
                        .iter()
                        .map(|c| {
                            let mut col = SparseVec::new();
                            if !c.is_zero() {
                                for (i, lc) in &self.derived.cointegral {
                                    col.insert(*i, lc.clone() * c.clone());
                                }
                            }
                            col
                        })
                        .collect()
                }
                other => {
                    // "integrate:<net>": y ↦ λ(g^{−net} y)·1_H, the closure
                    // coupon produced by turning a red cycle blue.
                    if let Some(net) = other.strip_prefix("integrate:").and_then(|s| s.parse::<i64>().ok()) {
                        if din != n || dout != n {
                            return Err(EvalError::Coupon(label.into(), "integrate is 1 -> 1 on H".into()));
                        }
                        self.red_closure_matrix(net)
                    } else {
                        return Err(EvalError::Coupon(label.into(), format!("unknown builtin {other:?}")));
                    }
                }
            },
            MorphismSpec::Lz(src) | MorphismSpec::Rx(src) => {
                if din != n || dout != n {
                    return Err(EvalError::Coupon(
                        label.into(),
                        "multiplication coupons are 1 -> 1 on H".into(),
                    ));
                }
                let alg = self.alg.ok_or(EvalError::NoElementParser)?;
                let expr = parse_element(src, &alg.params)?;
                let z = normal_order(alg, &expr)?;
                let left = matches!(&spec.morphism, MorphismSpec::Lz(_));
                (0..n)
                    .map(|j| {
                        let mut ej: Elem<Cyc> = Elem::new();
                        ej.insert(j, Cyc::one());
                        if left {
                            self.h.mul(&z, &ej)
                        } else {
                            self.h.mul(&ej, &z)
                        }
                    })
                    .collect()
            }
            MorphismSpec::Matrix { src_dim, dst_dim, entries } => {
                if *src_dim != din || *dst_dim != dout {
                    return Err(EvalError::Coupon(label.into(), "matrix dimensions mismatch legs".into()));
                }
                let mut cols: SparseMat<Cyc> = vec![SparseVec::new(); din];
                for (r, c, s) in entries {
                    if *r >= dout || *c >= din {
                        return Err(EvalError::Coupon(label.into(), "matrix entry out of range".into()));
                    }
                    let rat = Rat::from_str(s).map_err(|e| {
                        EvalError::Coupon(label.into(), format!("bad rational {s:?}: {e}"))
                    })?;
                    cols[*c].insert(*r, Cyc::from_rat_of(self.order, &rat));
                }
                cols
            }
        };
        Ok((din, dout, mat))
    }

    /// Evaluate a diagram into the morphism (bottom) → (top). Closed red
    /// cycles are integrated.
    pub fn evaluate(&mut self, d: &Diagram) -> Result<ModMap<Cyc>, EvalError> {
        self.evaluate_with(d, &[])
    }

    /// As `evaluate`, with extra single-strand insertions applied at the
    /// chosen edges' recorded up-points (used for modified-trace cuts).
    pub fn evaluate_with(
        &mut self,
        d: &Diagram,
        extra: &[(usize, SparseMat<Cyc>)],
    ) -> Result<ModMap<Cyc>, EvalError> {
        let a = analyze(d)?;
        // Insertion schedule: level -> [(position, matrix)].
        let mut inserts: BTreeMap<usize, Vec<(usize, SparseMat<Cyc>)>> = BTreeMap::new();
        for &cyc in &smoothing(&a).cycles {
            let info = &a.edges[cyc];
            let (slice, pos, is_left) = info.first_cup.ok_or(EvalError::NoCutPoint(cyc))?;
            let at = if is_left { pos } else { pos + 1 };
            let m = self.red_closure_matrix(info.net_right);
            inserts.entry(slice + 1).or_default().push((at, m));
        }
        for (edge, m) in extra {
            let info = a
                .edges
                .get(*edge)
                .ok_or(EvalError::NoCutPoint(*edge))?;
            let (lvl, pos) = info.up_point.ok_or(EvalError::NoCutPoint(*edge))?;
            inserts.entry(lvl).or_default().push((pos, m.clone()));
        }

        let mut dims: Vec<usize> = Vec::new();
        for p in &d.bottom {
            dims.push(self.object(p, &d.colors)?.dim);
        }
        let src_dim: usize = dims.iter().product();
        self.check_budget(src_dim)?;
        let mut cols: Vec<SparseVec<Cyc>> = (0..src_dim)
            .map(|i| {
                let mut v = SparseVec::new();
                v.insert(i, Cyc::one());
                v
            })
            .collect();

        // Level-0 insertions (open diagrams may cut a boundary edge).
        if let Some(list) = inserts.get(&0).cloned() {
            for (pos, m) in list {
                let od = vec![dims[pos]];
                apply_local(&mut cols, &mut dims, pos, 1, &od, &m);
            }
        }

        for (si, row) in d.slices.iter().enumerate() {
            let mut k = 0usize; // current strand position
            let mut level = a.levels[si].clone();
            for piece in row {
                match piece {
                    Piece::Id => {
                        k += 1;
                    }
                    Piece::TwistPos | Piece::TwistNeg => {
                        let p = &level[k];
                        let rep = self.object(p, &d.colors)?;
                        let bead = if matches!(piece, Piece::TwistPos) {
                            self.derived.ribbon_inv.clone()
                        } else {
                            self.h.ribbon.clone().ok_or(EvalError::NoRMatrix)?
                        };
                        let m = rep.act(&bead);
                        let od = vec![rep.dim];
                        apply_local(&mut cols, &mut dims, k, 1, &od, &m);
                        k += 1;
                    }
                    Piece::CrossPos | Piece::CrossNeg => {
                        let (pa, pb) = (level[k].clone(), level[k + 1].clone());
                        let ra = self.object(&pa, &d.colors)?;
                        let rb = self.object(&pb, &d.colors)?;
                        let m = self.crossing(&ra, &rb, matches!(piece, Piece::CrossPos))?;
                        let od = vec![rb.dim, ra.dim];
                        apply_local(&mut cols, &mut dims, k, 2, &od, &m);
                        level.swap(k, k + 1);
                        k += 2;
                    }
                    Piece::CapLeft | Piece::CapRight => {
                        let p = &level[k];
                        let dual = self.duality_of(&p.color, &d.colors)?;
                        let m = if matches!(piece, Piece::CapLeft) {
                            dual.ev_left.mat
                        } else {
                            dual.ev_right.mat
                        };
                        apply_local(&mut cols, &mut dims, k, 2, &[], &m);
                        level.remove(k);
                        level.remove(k);
                    }
                    Piece::CupLeft(p) | Piece::CupRight(p) => {
                        let dual = self.duality_of(&p.color, &d.colors)?;
                        let rd = self.object(p, &d.colors)?.dim;
                        let m = if matches!(piece, Piece::CupLeft(_)) {
                            dual.coev_left.mat
                        } else {
                            dual.coev_right.mat
                        };
                        let od = vec![rd, rd];
                        let need: usize = dims.iter().product::<usize>() * rd * rd;
                        self.check_budget(need)?;
                        apply_local(&mut cols, &mut dims, k, 0, &od, &m);
                        // cup_left emits (up, down), cup_right (down, up).
                        let is_left = matches!(piece, Piece::CupLeft(_));
                        level.insert(k, p.flip_clone(is_left));
                        level.insert(k, p.flip_clone(!is_left));
                        k += 2;
                    }
                    Piece::Coupon { label } => {
                        let spec = d.coupons.get(label).ok_or_else(|| {
                            EvalError::Coupon(label.clone(), "undefined".into())
                        })?;
                        let (din, dout, m) = self.coupon_matrix(label, spec, &d.colors)?;
                        let nin = spec.inputs.len();
                        let mut od = Vec::new();
                        for p in &spec.outputs {
                            od.push(self.object(p, &d.colors)?.dim);
                        }
                        let need: usize = dims
                            .iter()
                            .take(k)
                            .chain(dims.iter().skip(k + nin))
                            .product::<usize>()
                            * dout.max(1);
                        self.check_budget(need.max(din))?;
                        apply_local(&mut cols, &mut dims, k, nin, &od, &m);
                        for _ in 0..nin {
                            level.remove(k);
                        }
                        for p in spec.outputs.iter().rev() {
                            level.insert(k, p.clone());
                        }
                        k += spec.outputs.len();
                    }
                }
                let width: usize = dims.iter().product();
                self.check_budget(width)?;
            }
            if let Some(list) = inserts.get(&(si + 1)).cloned() {
                for (pos, m) in list {
                    let od = vec![dims[pos]];
                    apply_local(&mut cols, &mut dims, pos, 1, &od, &m);
                }
            }
        }

        let dst_dim: usize = dims.iter().product();
        let out = ModMap {
            src_dim,
            dst_dim,
            mat: cols,
        };
        if self.verify_equivariance {
            let srep = self.boundary_rep(&d.bottom, &d.colors)?;
            let drep = self.boundary_rep(&d.top, &d.colors)?;
            if !out.is_equivariant(self.h, &srep, &drep) {
                return Err(EvalError::NotEquivariant);
            }
        }
        Ok(out)
    }

    fn boundary_rep(
        &mut self,
        pts: &[Point],
        colors: &BTreeMap<String, crate::diagrams::ColorSpec>,
    ) -> Result<Rep<Cyc>, EvalError> {
        let mut acc = trivial_rep(self.h);
        for p in pts {
            let r = self.object(p, colors)?;
            acc = tensor_rep(self.h, &acc, &r);
        }
        Ok(acc)
    }

    /// Scalar value of a closed diagram (red cycles integrated).
    pub fn eval_closed(&mut self, d: &Diagram) -> Result<Cyc, EvalError> {
        if !d.is_closed() {
            return Err(EvalError::NotClosed);
        }
        let m = self.evaluate(d)?;
        Ok(m.mat[0].get(&0).cloned().unwrap_or_else(|| self.zero()))
    }

    /// Scalar value of a closed diagram with an extra insertion at the
    /// chosen edge (the modified-trace cut).
    pub fn eval_closed_with_cut(
        &mut self,
        d: &Diagram,
        edge: usize,
        m: &SparseMat<Cyc>,
    ) -> Result<Cyc, EvalError> {
        if !d.is_closed() {
            return Err(EvalError::NotClosed);
        }
        let out = self.evaluate_with(d, &[(edge, m.clone())])?;
        Ok(out.mat[0].get(&0).cloned().unwrap_or_else(|| self.zero()))
    }

    fn check_budget(&self, need: usize) -> Result<(), EvalError> {
        if need > self.budget {
            return Err(EvalError::Budget { need, limit: self.budget });
        }
        Ok(())
    }

    /// (λ ⊗ id) ∘ m ∘ (η ⊗ id): integrate out a leading regular factor.
    pub fn integrate(&mut self, m: &ModMap<Cyc>) -> ModMap<Cyc> {
        let n = self.h.dim;
        assert!(m.src_dim % n == 0 && m.dst_dim % n == 0, "integrate shape");
        let ws = m.src_dim / n;
        let wd = m.dst_dim / n;
        let unit = self.unit_elem();
        let lam = &self.derived.lambda;
        let mut cols: SparseMat<Cyc> = vec![SparseVec::new(); ws];
        for w in 0..ws {
            let mut acc: SparseVec<Cyc> = SparseVec::new();
            for (i, u) in &unit {
                let col = &m.mat[i * ws + w];
                for (&idx, c) in col {
                    let li = &lam[idx / wd];
                    if li.is_zero() {
                        continue;
                    }
                    let e = acc.entry(idx % wd).or_insert_with(Cyc::zero);
                    *e = e.clone() + li.clone() * c.clone() * u.clone();
                }
            }
            acc.retain(|_, c| !c.is_zero());
            cols[w] = acc;
        }
        ModMap {
            src_dim: ws,
            dst_dim: wd,
            mat: cols,
        }
    }

    /// Flip the chrome of a closed red cycle to blue, compensating with an
    /// explicit integration coupon at the cycle's closure point.
    pub fn turn_red_cycle_blue(&mut self, d: &Diagram, cycle: usize) -> Result<Diagram, EvalError> {
        let a = analyze(d)?;
        let info = &a.edges[cycle];
        if info.chrome != Chrome::Red || !info.closed {
            return Err(EvalError::NoCutPoint(cycle));
        }
        let (slice, pos, is_left) = info.first_cup.ok_or(EvalError::NoCutPoint(cycle))?;
        let at = if is_left { pos } else { pos + 1 };
        let mut out = d.clone();
        // Recolor every strand of the cycle.
        recolor_edge(&mut out, &a, cycle);
        let label = format!("__integrate_{cycle}");
        out.coupons.insert(
            label.clone(),
            CouponSpec {
                inputs: vec![Point::blue("H")],
                outputs: vec![Point::blue("H")],
                morphism: MorphismSpec::Builtin(format!("integrate:{}", info.net_right)),
            },
        );
        // Insert the coupon row right above the cycle's lowest cup.
        let width = a.levels[slice + 1].len();
        let mut row = Vec::new();
        for i in 0..width {
            if i == at {
                row.push(Piece::Coupon { label: label.clone() });
            } else {
                row.push(Piece::Id);
            }
        }
        out.slices.insert(slice + 1, row);
        Ok(out)
    }
}

fn recolor_edge(d: &mut Diagram, a: &Analysis, edge: usize) {
    // Recolor cup pieces whose created strands belong to the edge. Other
    // pieces do not carry chrome.
    let coupon_outs: BTreeMap<String, usize> = d
        .coupons
        .iter()
        .map(|(k, c)| (k.clone(), c.outputs.len()))
        .collect();
    for (si, row) in d.slices.iter_mut().enumerate() {
        let mut pos_out = 0usize;
        for piece in row.iter_mut() {
            match piece {
                Piece::CupLeft(p) | Piece::CupRight(p) => {
                    if a.edge_levels[si + 1][pos_out] == edge {
                        p.chrome = Chrome::Blue;
                    }
                    pos_out += 2;
                }
                Piece::Id | Piece::TwistPos | Piece::TwistNeg => pos_out += 1,
                Piece::CrossPos | Piece::CrossNeg => pos_out += 2,
                Piece::CapLeft | Piece::CapRight => {}
                Piece::Coupon { label } => {
                    pos_out += coupon_outs.get(label.as_str()).copied().unwrap_or(0);
                }
            }
        }
    }
}

impl Point {
    fn flip_clone(&self, down: bool) -> Point {
        Point {
            dir: if down { Dir::Down } else { Dir::Up },
            chrome: self.chrome,
            color: self.color.clone(),
        }
    }
}

/// Apply a local operator to `nin` adjacent tensor factors at position
/// `k`, replacing them by factors of dimensions `out_dims`.
pub fn apply_local(
    cols: &mut Vec<SparseVec<Cyc>>,
    dims: &mut Vec<usize>,
    k: usize,
    nin: usize,
    out_dims: &[usize],
    op: &SparseMat<Cyc>,
) {
    let in_block: usize = dims[k..k + nin].iter().product();
    let low: usize = dims[k + nin..].iter().product();
    let out_block: usize = out_dims.iter().product();
    for col in cols.iter_mut() {
        let mut acc: SparseVec<Cyc> = SparseVec::new();
        for (&idx, c) in col.iter() {
            let low_i = idx % low.max(1);
            let rest = idx / low.max(1);
            let mid = rest % in_block.max(1);
            let pre = rest / in_block.max(1);
            for (&mid2, c2) in &op[mid] {
                let nidx = (pre * out_block.max(1) + mid2) * low.max(1) + low_i;
                let e = acc.entry(nidx).or_insert_with(Cyc::zero);
                *e = e.clone() + c.clone() * c2.clone();
            }
        }
        acc.retain(|_, v| !v.is_zero());
        *col = acc;
    }
    dims.splice(k..k + nin, out_dims.iter().cloned());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagrams::{hopf_link, unknot, ColorSpec};
    use crate::qgroups::{build_extension_d, build_small_quantum_sl2};
    use crate::reps::mat_identity;

    fn env(alg: &QGroupAlgebra) -> EvalEnv<'_> {
        EvalEnv::new(&alg.hopf, Some(alg)).unwrap()
    }

    #[test]
    fn unknot_calibration_small_sl2() {
        let alg = build_small_quantum_sl2(3).unwrap();
        let mut e = env(&alg);
        let zero = e.eval_closed(&unknot(Chrome::Red, "H", 0)).unwrap();
        assert!(zero.is_zero(), "0-framed unknot integrates to lambda(g) = 0");
        let plus = e.eval_closed(&unknot(Chrome::Red, "H", 1)).unwrap();
        assert_eq!(plus, e.derived.delta_plus, "+1 framing gives Delta_+");
        let minus = e.eval_closed(&unknot(Chrome::Red, "H", -1)).unwrap();
        assert_eq!(minus, e.derived.delta_minus, "-1 framing gives Delta_-");
    }

    #[test]
    fn unknot_calibration_extension_d() {
        let alg = build_extension_d(2).unwrap();
        let mut e = env(&alg);
        let plus = e.eval_closed(&unknot(Chrome::Red, "H", 1)).unwrap();
        assert_eq!(plus, e.derived.delta_plus);
        let minus = e.eval_closed(&unknot(Chrome::Red, "H", -1)).unwrap();
        assert_eq!(minus, e.derived.delta_minus);
        assert!(e.eval_closed(&unknot(Chrome::Red, "H", 0)).unwrap().is_zero());
    }

    #[test]
    fn reversed_circle_matches() {
        // The same ±1-framed unknot drawn with the opposite orientation
        // (cup_right / cap_left closure).
        let alg = build_small_quantum_sl2(3).unwrap();
        let mut e = env(&alg);
        for (t, expect) in [(1i64, e.derived.delta_plus.clone()), (-1, e.derived.delta_minus.clone())] {
            let p = Point::red_h();
            let mut slices = vec![vec![Piece::CupRight(p)]];
            for _ in 0..t.unsigned_abs() {
                slices.push(vec![
                    Piece::Id,
                    if t > 0 { Piece::TwistPos } else { Piece::TwistNeg },
                ]);
            }
            slices.push(vec![Piece::CapLeft]);
            let d = Diagram {
                colors: [("H".to_string(), ColorSpec::Regular)].into_iter().collect(),
                bottom: vec![],
                top: vec![],
                slices,
                coupons: BTreeMap::new(),
            };
            let got = e.eval_closed(&d).unwrap();
            assert_eq!(got, expect, "reversed orientation, framing {t}");
        }
    }

    #[test]
    fn cut_point_independence_wiggled_unknot() {
        // A +1-framed red unknot drawn with an extra cup/cap wiggle, so
        // the lowest cup (the automatic cut point) is a different one.
        let alg = build_small_quantum_sl2(3).unwrap();
        let mut e = env(&alg);
        let p = Point::red_h();
        let d = Diagram {
            colors: [("H".to_string(), ColorSpec::Regular)].into_iter().collect(),
            bottom: vec![],
            top: vec![],
            slices: vec![
                vec![Piece::CupLeft(p.clone())],
                vec![Piece::TwistPos, Piece::Id],
                // Wiggle on the up strand: coev_left then ev_left.
                vec![Piece::CupLeft(p), Piece::Id, Piece::Id],
                vec![Piece::Id, Piece::CapLeft, Piece::Id],
                vec![Piece::CapRight],
            ],
            coupons: BTreeMap::new(),
        };
        let got = e.eval_closed(&d).unwrap();
        assert_eq!(got, e.derived.delta_plus, "wiggled +1 unknot still Delta_+");
    }

    #[test]
    fn zigzags_and_r2_through_engine() {
        let alg = build_small_quantum_sl2(3).unwrap();
        let mut e = env(&alg);
        let n = alg.hopf.dim;
        let p = Point::blue("H");
        // Left zigzag: (id ⊗ ev_left) ∘ (coev_left ⊗ id) = id.
        let d1 = Diagram {
            colors: [("H".to_string(), ColorSpec::Regular)].into_iter().collect(),
            bottom: vec![p.clone()],
            top: vec![p.clone()],
            slices: vec![
                vec![Piece::CupLeft(p.clone()), Piece::Id],
                vec![Piece::Id, Piece::CapLeft],
            ],
            coupons: BTreeMap::new(),
        };
        let m1 = e.evaluate(&d1).unwrap();
        assert_eq!(m1.mat, mat_identity::<Cyc>(n));
        // Right zigzag: (ev_right ⊗ id) ∘ (id ⊗ coev_right) = id.
        let d2 = Diagram {
            colors: [("H".to_string(), ColorSpec::Regular)].into_iter().collect(),
            bottom: vec![p.clone()],
            top: vec![p.clone()],
            slices: vec![
                vec![Piece::Id, Piece::CupRight(p.clone())],
                vec![Piece::CapRight, Piece::Id],
            ],
            coupons: BTreeMap::new(),
        };
        let m2 = e.evaluate(&d2).unwrap();
        assert_eq!(m2.mat, mat_identity::<Cyc>(n));
        // R2: a positive then negative crossing is the identity.
        let d3 = Diagram {
            colors: [("H".to_string(), ColorSpec::Regular)].into_iter().collect(),
            bottom: vec![p.clone(), p.clone()],
            top: vec![p.clone(), p],
            slices: vec![vec![Piece::CrossPos], vec![Piece::CrossNeg]],
            coupons: BTreeMap::new(),
        };
        let m3 = e.evaluate(&d3).unwrap();
        assert_eq!(m3.mat, mat_identity::<Cyc>(n * n));
    }

    #[test]
    fn yang_baxter_on_sample_vectors() {
        let alg = build_small_quantum_sl2(3).unwrap();
        let mut e = env(&alg);
        let p = Point::blue("H");
        let mk = |order: [usize; 3]| Diagram {
            colors: [("H".to_string(), ColorSpec::Regular)].into_iter().collect(),
            bottom: vec![p.clone(), p.clone(), p.clone()],
            top: vec![p.clone(), p.clone(), p.clone()],
            slices: order
                .iter()
                .map(|&at| {
                    if at == 0 {
                        vec![Piece::CrossPos, Piece::Id]
                    } else {
                        vec![Piece::Id, Piece::CrossPos]
                    }
                })
                .collect(),
            coupons: BTreeMap::new(),
        };
        let lhs = mk([0, 1, 0]);
        let rhs = mk([1, 0, 1]);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = alg.hopf.dim;
        for _ in 0..5 {
            let mut v: SparseVec<Cyc> = SparseVec::new();
            for _ in 0..3 {
                let idx = rng.gen_range(0..n * n * n);
                let c = Cyc::from_i64_of(3, rng.gen_range(-3..4));
                v.insert(idx, c);
            }
            let va = apply_diagram_to(&mut e, &lhs, &v);
            let vb = apply_diagram_to(&mut e, &rhs, &v);
            assert_eq!(va, vb, "Yang-Baxter on a random vector");
        }
    }

    fn apply_diagram_to(e: &mut EvalEnv<'_>, d: &Diagram, v: &SparseVec<Cyc>) -> SparseVec<Cyc> {
        let mut cols = vec![v.clone()];
        let mut dims: Vec<usize> = d
            .bottom
            .iter()
            .map(|p| e.object(p, &d.colors).unwrap().dim)
            .collect();
        let a = analyze(d).unwrap();
        for (si, row) in d.slices.iter().enumerate() {
            let mut k = 0usize;
            let level = a.levels[si].clone();
            for piece in row {
                match piece {
                    Piece::Id => k += 1,
                    Piece::CrossPos | Piece::CrossNeg => {
                        let ra = e.object(&level[k], &d.colors).unwrap();
                        let rb = e.object(&level[k + 1], &d.colors).unwrap();
                        let m = e
                            .crossing(&ra, &rb, matches!(piece, Piece::CrossPos))
                            .unwrap();
                        let od = vec![rb.dim, ra.dim];
                        apply_local(&mut cols, &mut dims, k, 2, &od, &m);
                        k += 2;
                    }
                    _ => unreachable!("test diagrams only use id and crossings"),
                }
            }
        }
        cols.pop().unwrap()
    }

    #[test]
    fn meridian_pair_is_admissible_and_evaluates() {
        let alg = build_small_quantum_sl2(3).unwrap();
        let mut e = env(&alg);
        let d = crate::diagrams::meridian_pair(Chrome::Blue, "H");
        assert!(crate::diagrams::is_admissible(&d, &alg.hopf).unwrap());
        // Closed bichrome diagram evaluates to a scalar exactly.
        let _val = e.eval_closed(&d).unwrap();
        // Red-red Hopf link also evaluates.
        let rr = hopf_link(Chrome::Red, "H", Chrome::Red, "H", true);
        let _ = e.eval_closed(&rr).unwrap();
    }
}
