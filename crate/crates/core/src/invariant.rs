//! The (renormalized) Hennings invariant of closed 3-manifolds from
//! surgery presentations: red cycles form the surgery link L, blue edges
//! the embedded graph T, and
//!
//! ```text
//! H'(M, T) = D^{−1−ℓ} · δ^{−σ(L)} · F'_λ(L ∪ T) · δ^n
//! ```
//!
//! where D² = Δ₊Δ₋ lives in a formal quadratic extension, δ = Δ₊/D,
//! ℓ is the number of surgery components, σ the signature of the linking
//! matrix, and n a user-supplied signature defect.

use crate::cyclo::CycScalar;
use crate::diagrams::{
    analyze, hopf_link, is_admissible, linking_data, unknot, Chrome, ColorSpec, Diagram,
    DiagramError, Piece,
};
use crate::eval::{EvalEnv, EvalError};
use crate::mtrace::{renormalized_eval, TraceError};
use crate::scalar::{Field, Quad, ScalarError};
use num_traits::One;
use std::collections::BTreeMap;
use thiserror::Error;

type Cyc = CycScalar;
pub type Ext = Quad<CycScalar>;

#[derive(Debug, Clone, Error)]
pub enum InvariantError {
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("diagram has blue content; use the renormalized invariant")]
    BlueContent,
    #[error("blue part is not admissible (no projective blue edge)")]
    NotAdmissible,
    #[error("unsupported slide geometry: {0}")]
    Slide(String),
}

#[derive(Debug, Clone)]
pub struct SurgeryPresentation {
    pub diagram: Diagram,
    /// Signature defect of the bounding 4-manifold data; contributes δⁿ.
    pub defect: i64,
}

impl SurgeryPresentation {
    pub fn new(diagram: Diagram) -> Self {
        SurgeryPresentation { diagram, defect: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct InvariantValue {
    pub value: Ext,
    pub ell: usize,
    pub sigma: i64,
}

pub fn ext_pow(x: &Ext, k: i64) -> Result<Ext, ScalarError> {
    let base = if k < 0 { x.inv()? } else { x.clone() };
    let mut out = Ext::one();
    for _ in 0..k.unsigned_abs() {
        out = out * base.clone();
    }
    Ok(out)
}

fn link_stats(d: &Diagram) -> Result<(usize, i64, bool), InvariantError> {
    if d.slices.is_empty() {
        return Ok((0, 0, false));
    }
    let a = analyze(d)?;
    let link = linking_data(&a)?;
    let has_blue = a
        .edges
        .iter()
        .any(|e| e.chrome == Chrome::Blue && e.closed);
    Ok((link.components.len(), link.signature, has_blue))
}

/// Plain Hennings invariant of a red-only presentation.
pub fn hennings(env: &mut EvalEnv<'_>, d: &Diagram) -> Result<InvariantValue, InvariantError> {
    let (ell, sigma, has_blue) = link_stats(d)?;
    if has_blue {
        return Err(InvariantError::BlueContent);
    }
    let f = if d.slices.is_empty() {
        Cyc::one()
    } else {
        env.eval_closed(d)?
    };
    normalize(env, f, ell, sigma, 0)
}

/// Renormalized invariant of an admissible presentation with blue graph.
pub fn renormalized_invariant(
    env: &mut EvalEnv<'_>,
    p: &SurgeryPresentation,
) -> Result<InvariantValue, InvariantError> {
    let d = &p.diagram;
    let (ell, sigma, has_blue) = link_stats(d)?;
    if !has_blue {
        return Err(InvariantError::NotAdmissible);
    }
    if !is_admissible(d, env.h)? {
        return Err(InvariantError::NotAdmissible);
    }
    let f = renormalized_eval(env, d)?;
    normalize(env, f, ell, sigma, p.defect)
}

/// Dispatch on blue content: renormalized if the graph part is nonempty.
pub fn invariant_auto(
    env: &mut EvalEnv<'_>,
    p: &SurgeryPresentation,
) -> Result<InvariantValue, InvariantError> {
    let (_, _, has_blue) = link_stats(&p.diagram)?;
    if has_blue {
        renormalized_invariant(env, p)
    } else {
        let mut v = hennings(env, &p.diagram)?;
        if p.defect != 0 {
            let delta = env.derived.delta().map_err(EvalError::from)?;
            v.value = v.value * ext_pow(&delta, p.defect)?;
        }
        Ok(v)
    }
}

fn normalize(
    env: &mut EvalEnv<'_>,
    f: Cyc,
    ell: usize,
    sigma: i64,
    defect: i64,
) -> Result<InvariantValue, InvariantError> {
    let big_d = env.derived.big_d();
    let delta = env.derived.delta().map_err(EvalError::from)?;
    let value = Ext::from_base(f)
        * ext_pow(&big_d, -1 - ell as i64)?
        * ext_pow(&delta, defect - sigma)?;
    Ok(InvariantValue { value, ell, sigma })
}

/// Disjoint union of two closed diagrams: stack the slices; coupon labels
/// of the second diagram are suffixed on collision.
pub fn disjoint_union(a: &Diagram, b: &Diagram) -> Diagram {
    let mut colors = a.colors.clone();
    for (k, v) in &b.colors {
        colors.entry(k.clone()).or_insert_with(|| v.clone());
    }
    let mut coupons = a.coupons.clone();
    let mut rename: BTreeMap<String, String> = BTreeMap::new();
    for (k, v) in &b.coupons {
        let mut name = k.clone();
        while coupons.contains_key(&name) {
            name.push('\'');
        }
        rename.insert(k.clone(), name.clone());
        coupons.insert(name, v.clone());
    }
    let mut slices = a.slices.clone();
    for row in &b.slices {
        let row = row
            .iter()
            .map(|p| match p {
                Piece::Coupon { label } => Piece::Coupon {
                    label: rename.get(label).cloned().unwrap_or_else(|| label.clone()),
                },
                other => other.clone(),
            })
            .collect();
        slices.push(row);
    }
    Diagram {
        colors,
        bottom: a.bottom.clone(),
        top: a.top.clone(),
        slices,
        coupons,
    }
}

/// Kirby I move: add a split ±1-framed red unknot.
pub fn stabilize(p: &SurgeryPresentation, positive: bool) -> SurgeryPresentation {
    let u = unknot(Chrome::Red, "H", if positive { 1 } else { -1 });
    SurgeryPresentation {
        diagram: disjoint_union(&p.diagram, &u),
        defect: p.defect,
    }
}

/// Red/red Hopf link with explicit framings on both components; the
/// off-diagonal linking number is +1 when `positive`, else −1.
pub fn framed_hopf_link(f1: i64, f2: i64, positive: bool) -> Diagram {
    let mut d = hopf_link(Chrome::Red, "H", Chrome::Red, "H", positive);
    let cap_rows = d.slices.split_off(d.slices.len() - 1);
    for _ in 0..f1.unsigned_abs() {
        d.slices.push(vec![
            if f1 > 0 { Piece::TwistPos } else { Piece::TwistNeg },
            Piece::Id,
            Piece::Id,
            Piece::Id,
        ]);
    }
    for _ in 0..f2.unsigned_abs() {
        d.slices.push(vec![
            Piece::Id,
            Piece::Id,
            if f2 > 0 { Piece::TwistPos } else { Piece::TwistNeg },
            Piece::Id,
        ]);
    }
    d.slices.extend(cap_rows);
    d
}

/// Split union of framed red unknots.
pub fn framed_unlink(framings: &[i64]) -> Diagram {
    let mut it = framings.iter();
    let first = *it.next().expect("nonempty unlink");
    let mut d = unknot(Chrome::Red, "H", first);
    for &f in it {
        d = disjoint_union(&d, &unknot(Chrome::Red, "H", f));
    }
    d
}

/// Kirby II move, scripted for the split two-unknot configuration: slide
/// component 1 (framing f1) over component 2 (framing f2, |f2| = 1). The
/// band sum with the ±1-framed pushoff produces a Hopf link with framings
/// (f1 + f2, f2) and linking number f2.
pub fn slide_over_unit_unknot(f1: i64, f2: i64) -> Result<(Diagram, Diagram), InvariantError> {
    if f2.abs() != 1 {
        return Err(InvariantError::Slide(
            "scripted slide needs a ±1-framed target unknot".into(),
        ));
    }
    let before = framed_unlink(&[f1, f2]);
    let after = framed_hopf_link(f1 + f2, f2, f2 > 0);
    Ok((before, after))
}

#[derive(Debug, Clone)]
pub struct SurgeryConstantsReport {
    /// H'(index-0 handle model: blue unknot with Λ∘ε coupon) = D⁻¹.
    pub index0: bool,
    /// Connected-sum splitting: H'(A ⊔ B) = D · H'(A) · H'(B).
    pub index1: bool,
    /// Index-2 handle (split ±1-framed red unknots) leaves H' unchanged.
    pub index2: bool,
    pub details: Vec<String>,
}

impl SurgeryConstantsReport {
    pub fn all_pass(&self) -> bool {
        self.index0 && self.index1 && self.index2
    }
}

pub fn surgery_constants_check(
    env: &mut EvalEnv<'_>,
) -> Result<SurgeryConstantsReport, InvariantError> {
    let mut details = Vec::new();
    let big_d = env.derived.big_d();
    let d_inv = big_d.inv()?;

    let b0 = crate::diagrams::decorated_unknot(
        "H",
        "c",
        crate::diagrams::endo_coupon("H", crate::diagrams::MorphismSpec::Builtin("lambda_eps".into())),
    );
    let v0 = renormalized_invariant(env, &SurgeryPresentation::new(b0.clone()))?;
    let index0 = v0.value == d_inv;
    details.push(format!(
        "index 0: H'(B0) = {} (expect D^-1 = {})",
        v0.value.render(),
        d_inv.render()
    ));

    let a = unknot(Chrome::Red, "H", 1);
    let combo = SurgeryPresentation::new(disjoint_union(&a, &b0));
    let va = hennings(env, &a)?;
    let vb = renormalized_invariant(env, &SurgeryPresentation::new(b0.clone()))?;
    let vab = renormalized_invariant(env, &combo)?;
    let index1 = vab.value == big_d.clone() * va.value.clone() * vb.value.clone();
    details.push(format!(
        "index 1: H'(A | B) = {}, D H'(A) H'(B) = {}",
        vab.value.render(),
        (big_d * va.value * vb.value).render()
    ));

    let base = SurgeryPresentation::new(b0);
    let v = renormalized_invariant(env, &base)?;
    let vp = renormalized_invariant(env, &stabilize(&base, true))?;
    let vm = renormalized_invariant(env, &stabilize(&base, false))?;
    let index2 = v.value == vp.value && v.value == vm.value;
    details.push(format!(
        "index 2: base {}, +1 stab {}, -1 stab {}",
        v.value.render(),
        vp.value.render(),
        vm.value.render()
    ));

    Ok(SurgeryConstantsReport {
        index0,
        index1,
        index2,
        details,
    })
}

/// The named example presentations used by the test corpus and the CLI.
pub fn fixture(name: &str) -> Result<SurgeryPresentation, DiagramError> {
    use crate::diagrams::{decorated_unknot, endo_coupon, meridian_pair, trefoil, MorphismSpec};
    let d = match name {
        "s3-empty" => Diagram {
            colors: BTreeMap::from([("H".to_string(), ColorSpec::Regular)]),
            bottom: vec![],
            top: vec![],
            slices: vec![],
            coupons: BTreeMap::new(),
        },
        "s1xs2" => unknot(Chrome::Red, "H", 0),
        "s3-plus-one" => unknot(Chrome::Red, "H", 1),
        "s3-minus-one" => unknot(Chrome::Red, "H", -1),
        "meridian-pair" => meridian_pair(Chrome::Blue, "H"),
        "hopf" => framed_hopf_link(0, 0, true),
        "trefoil-blue" => trefoil(Chrome::Blue, "H", true),
        "trefoil-plus-one" => {
            let mut d = trefoil(Chrome::Red, "H", true);
            let cap_rows = d.slices.split_off(d.slices.len() - 2);
            d.slices
                .push(vec![Piece::TwistPos, Piece::Id, Piece::Id, Piece::Id]);
            d.slices.extend(cap_rows);
            d
        }
        "cutting-lemma-pair" => decorated_unknot(
            "H",
            "c",
            endo_coupon("H", MorphismSpec::Builtin("lambda_eps".into())),
        ),
        "slide-pair" => framed_hopf_link(2, 1, true),
        other => return Err(DiagramError::UnknownFixture(other.to_string())),
    };
    Ok(SurgeryPresentation::new(d))
}

pub const FIXTURE_NAMES: &[&str] = &[
    "s3-empty",
    "s1xs2",
    "s3-plus-one",
    "s3-minus-one",
    "meridian-pair",
    "hopf",
    "trefoil-blue",
    "trefoil-plus-one",
    "cutting-lemma-pair",
    "slide-pair",
];

#[cfg(test)]
mod tests {
    use num_traits::Zero;
    use super::*;
    use crate::qgroups::{build_extension_d, build_small_quantum_sl2};

    fn env3() -> (crate::qgroups::QGroupAlgebra, ()) {
        (build_small_quantum_sl2(3).unwrap(), ())
    }

    #[test]
    fn sphere_presentations_match() {
        let (alg, _) = env3();
        let mut env = EvalEnv::new(&alg.hopf, Some(&alg)).unwrap();
        let d_inv = env.derived.big_d().inv().unwrap();
        let empty = fixture("s3-empty").unwrap();
        let v = hennings(&mut env, &empty.diagram).unwrap();
        assert_eq!(v.value, d_inv, "H(S3 from empty link) = D^-1");
        for name in ["s3-plus-one", "s3-minus-one"] {
            let p = fixture(name).unwrap();
            let v = hennings(&mut env, &p.diagram).unwrap();
            assert_eq!(v.value, d_inv, "H(S3 from {name}) = D^-1");
            assert_eq!(v.ell, 1);
        }
    }

    #[test]
    fn s1_x_s2_vanishes_red_only() {
        let (alg, _) = env3();
        let mut env = EvalEnv::new(&alg.hopf, Some(&alg)).unwrap();
        let p = fixture("s1xs2").unwrap();
        let v = hennings(&mut env, &p.diagram).unwrap();
        assert!(v.value.is_zero(), "H(S1 x S2) = 0 at r=3");
        let algd = build_extension_d(2).unwrap();
        let mut envd = EvalEnv::new(&algd.hopf, Some(&algd)).unwrap();
        let vd = hennings(&mut envd, &p.diagram).unwrap();
        assert!(vd.value.is_zero(), "H(S1 x S2) = 0 at p=2");
    }

    #[test]
    fn meridian_pair_gives_one() {
        let (alg, _) = env3();
        let mut env = EvalEnv::new(&alg.hopf, Some(&alg)).unwrap();
        let p = fixture("meridian-pair").unwrap();
        let v = renormalized_invariant(&mut env, &p).unwrap();
        assert!(
            v.value.is_one(),
            "H'(S1 x S2 with blue H meridian) = 1, got {}",
            v.value.render()
        );
        assert_eq!((v.ell, v.sigma), (1, 0));
    }

    #[test]
    fn decorated_sphere_and_constants() {
        let (alg, _) = env3();
        let mut env = EvalEnv::new(&alg.hopf, Some(&alg)).unwrap();
        let report = surgery_constants_check(&mut env).unwrap();
        assert!(report.all_pass(), "surgery constants: {:?}", report.details);
    }

    #[test]
    fn kirby_one_stabilization() {
        let (alg, _) = env3();
        let mut env = EvalEnv::new(&alg.hopf, Some(&alg)).unwrap();
        for name in ["s1xs2", "meridian-pair", "cutting-lemma-pair"] {
            let p = fixture(name).unwrap();
            let v = invariant_auto(&mut env, &p).unwrap();
            for positive in [true, false] {
                let q = stabilize(&p, positive);
                let w = invariant_auto(&mut env, &q).unwrap();
                assert_eq!(v.value, w.value, "Kirby I on {name} (positive={positive})");
            }
        }
    }

    #[test]
    fn kirby_two_slides() {
        let (alg, _) = env3();
        let mut env = EvalEnv::new(&alg.hopf, Some(&alg)).unwrap();
        for (f1, f2) in [(1, 1), (1, -1), (0, 1), (-1, -1)] {
            let (before, after) = slide_over_unit_unknot(f1, f2).unwrap();
            let vb = hennings(&mut env, &before).unwrap();
            let va = hennings(&mut env, &after).unwrap();
            assert_eq!(
                vb.value, va.value,
                "Kirby II slide ({f1}) over ({f2}): {} vs {}",
                vb.value.render(),
                va.value.render()
            );
        }
    }

    #[test]
    fn orientation_reversal_of_surgery_component() {
        use crate::diagrams::Point;
        let (alg, _) = env3();
        let mut env = EvalEnv::new(&alg.hopf, Some(&alg)).unwrap();
        // +1-framed unknot drawn with the opposite orientation.
        let reversed = Diagram {
            colors: BTreeMap::from([("H".to_string(), ColorSpec::Regular)]),
            bottom: vec![],
            top: vec![],
            slices: vec![
                vec![Piece::CupRight(Point::red_h())],
                vec![Piece::Id, Piece::TwistPos],
                vec![Piece::CapLeft],
            ],
            coupons: BTreeMap::new(),
        };
        let v = hennings(&mut env, &reversed).unwrap();
        let d_inv = env.derived.big_d().inv().unwrap();
        assert_eq!(v.value, d_inv, "orientation-reversed +1 unknot still gives D^-1");
    }
}
