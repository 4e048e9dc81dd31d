//! Bichrome ribbon-graph diagrams in Morse (slice) position: typed
//! boundary objects, type checking, edge/cycle tracking, smoothing,
//! admissibility, linking data, builders, and cutting presentations.

use crate::cyclo::CycScalar;
use crate::hopf::HopfData;
use crate::linalg::signature_symmetric;
use crate::reps::{dual_coadjoint_x, dual_rep, is_projective, regular_rep, tensor_rep, trivial_rep, Rep};
use crate::scalar::Rat;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

type Cyc = CycScalar;

#[derive(Debug, Clone, Error)]
pub enum DiagramError {
    #[error("type error at slice {slice}, position {pos}: {msg}")]
    Type { slice: usize, pos: usize, msg: String },
    #[error("coupon {0}: {1}")]
    Coupon(String, String),
    #[error("unknown color {0:?}")]
    UnknownColor(String),
    #[error("red part has open (relative) cycles; not a surgery link")]
    RelativeRedCycles,
    #[error("diagram is not closed")]
    NotClosed,
    #[error("edge {0} is not a blue edge with projective color")]
    NotProjectiveBlue(usize),
    #[error("cut unsupported for this diagram shape: {0}")]
    CutUnsupported(String),
    #[error("signature: {0}")]
    Signature(String),
    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chrome {
    Red,
    Blue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dir {
    #[serde(rename = "+")]
    Up,
    #[serde(rename = "-")]
    Down,
}

/// One boundary point / strand type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Point {
    #[serde(rename = "sign")]
    pub dir: Dir,
    pub chrome: Chrome,
    pub color: String,
}

impl Point {
    pub fn red_h() -> Point {
        Point {
            dir: Dir::Up,
            chrome: Chrome::Red,
            color: "H".into(),
        }
    }
    pub fn blue(color: &str) -> Point {
        Point {
            dir: Dir::Up,
            chrome: Chrome::Blue,
            color: color.into(),
        }
    }
    fn flipped(&self) -> Point {
        Point {
            dir: match self.dir {
                Dir::Up => Dir::Down,
                Dir::Down => Dir::Up,
            },
            ..self.clone()
        }
    }
}

/// Module colors referenced by name from diagram strands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorSpec {
    Regular,
    Trivial,
    DualCoadjoint,
    Dual(String),
    Tensor(Vec<String>),
}

/// Coupon morphism content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MorphismSpec {
    /// Named built-in: "Lambda" (0 -> 1 legs), "epsilon" (1 -> 0),
    /// "lambda_eps" (the composite Λ∘ε, 1 -> 1).
    Builtin(String),
    /// Left multiplication by an element expression (1 -> 1 on H).
    Lz(String),
    /// Right multiplication by an element expression (1 -> 1 on H).
    Rx(String),
    /// Explicit matrix, entries as [row, col, rational] triples.
    Matrix {
        src_dim: usize,
        dst_dim: usize,
        entries: Vec<(usize, usize, String)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouponSpec {
    pub inputs: Vec<Point>,
    pub outputs: Vec<Point>,
    pub morphism: MorphismSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Piece {
    Id,
    CrossPos,
    CrossNeg,
    CapLeft,
    CapRight,
    CupLeft(Point),
    CupRight(Point),
    TwistPos,
    TwistNeg,
    Coupon { label: String },
}

impl Piece {
    fn arity_in(&self, coupons: &BTreeMap<String, CouponSpec>) -> usize {
        match self {
            Piece::Id | Piece::TwistPos | Piece::TwistNeg => 1,
            Piece::CrossPos | Piece::CrossNeg | Piece::CapLeft | Piece::CapRight => 2,
            Piece::CupLeft(_) | Piece::CupRight(_) => 0,
            Piece::Coupon { label } => coupons.get(label).map_or(0, |c| c.inputs.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagram {
    #[serde(default)]
    pub colors: BTreeMap<String, ColorSpec>,
    #[serde(default)]
    pub bottom: Vec<Point>,
    #[serde(default)]
    pub top: Vec<Point>,
    pub slices: Vec<Vec<Piece>>,
    #[serde(default)]
    pub coupons: BTreeMap<String, CouponSpec>,
}

/// Everything the type-check walk learns about a diagram.
#[derive(Debug, Clone)]
pub struct Analysis {
    /// Strand types at each of the slices+1 horizontal boundaries.
    pub levels: Vec<Vec<Point>>,
    /// Edge id per strand at each level (ids canonicalized).
    pub edge_levels: Vec<Vec<usize>>,
    pub edges: Vec<EdgeInfo>,
    /// Red-red crossing events (edge a, edge b, sign).
    pub red_crossings: Vec<(usize, usize, i64)>,
}

#[derive(Debug, Clone)]
pub struct EdgeInfo {
    pub chrome: Chrome,
    pub color: String,
    /// False if the edge reaches the bottom or top boundary.
    pub closed: bool,
    /// cap_right count minus cup_right count along the edge (the net
    /// pivotal twisting of its closure).
    pub net_right: i64,
    /// Explicit twist framing carried by twist pieces.
    pub twists: i64,
    /// A point (level index, strand position) where the edge runs upward.
    pub up_point: Option<(usize, usize)>,
    /// Lowest cup creating this edge, if any: (slice index, position of
    /// the cup's left leg after the row).
    pub first_cup: Option<(usize, usize, bool)>, // (slice, pos, is_left_cup)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new() -> Self {
        UnionFind { parent: Vec::new() }
    }
    fn fresh(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.parent.len() - 1
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

#[derive(Clone)]
struct Raw {
    chrome: Chrome,
    color: String,
    touches_boundary: bool,
    net_right: i64,
    twists: i64,
    up_point: Option<(usize, usize)>,
    first_cup: Option<(usize, usize, bool)>,
}

pub fn parse_diagram(doc: &str) -> Result<Diagram, DiagramError> {
    let d: Diagram = serde_json::from_str(doc)
        .map_err(|e| DiagramError::Type { slice: 0, pos: 0, msg: e.to_string() })?;
    analyze(&d)?;
    Ok(d)
}

/// Type-check the diagram and collect edge/crossing data.
pub fn analyze(d: &Diagram) -> Result<Analysis, DiagramError> {
    // Validate coupon leg rule up front.
    for (label, c) in &d.coupons {
        let k_in = c.inputs.iter().take_while(|p| p.chrome == Chrome::Red).count();
        let k_out = c.outputs.iter().take_while(|p| p.chrome == Chrome::Red).count();
        if c.inputs[k_in..].iter().any(|p| p.chrome == Chrome::Red)
            || c.outputs[k_out..].iter().any(|p| p.chrome == Chrome::Red)
        {
            return Err(DiagramError::Coupon(
                label.clone(),
                "red legs must precede blue legs".into(),
            ));
        }
        if k_in != k_out {
            return Err(DiagramError::Coupon(
                label.clone(),
                "red inputs and outputs must match in number".into(),
            ));
        }
        if c.inputs[..k_in].iter().chain(&c.outputs[..k_out]).any(|p| p.dir != Dir::Up) {
            return Err(DiagramError::Coupon(
                label.clone(),
                "red coupon legs must be positively oriented".into(),
            ));
        }
        if c.inputs[..k_in].iter().chain(&c.outputs[..k_out]).any(|p| p.color != "H") {
            return Err(DiagramError::Coupon(
                label.clone(),
                "red legs must carry the regular color H".into(),
            ));
        }
    }

    let mut uf = UnionFind::new();
    let mut raws: Vec<Raw> = Vec::new();
    let fresh = |uf: &mut UnionFind, raws: &mut Vec<Raw>, p: &Point, boundary: bool| -> usize {
        let id = uf.fresh();
        raws.push(Raw {
            chrome: p.chrome,
            color: p.color.clone(),
            touches_boundary: boundary,
            net_right: 0,
            twists: 0,
            up_point: None,
            first_cup: None,
        });
        id
    };

    let mut strands: Vec<(Point, usize)> = d
        .bottom
        .iter()
        .map(|p| {
            let id = fresh(&mut uf, &mut raws, p, true);
            (p.clone(), id)
        })
        .collect();

    let mut levels = vec![d.bottom.clone()];
    let mut edge_levels = vec![strands.iter().map(|(_, e)| *e).collect::<Vec<_>>()];
    let mut red_crossings = Vec::new();

    let record_up = |raws: &mut Vec<Raw>, uf: &mut UnionFind, strands: &[(Point, usize)], level: usize| {
        for (pos, (p, id)) in strands.iter().enumerate() {
            if p.dir == Dir::Up {
                let r = uf.find(*id);
                if raws[r].up_point.is_none() {
                    raws[r].up_point = Some((level, pos));
                }
            }
        }
    };
    record_up(&mut raws, &mut uf, &strands, 0);

    for (si, row) in d.slices.iter().enumerate() {
        let mut next: Vec<(Point, usize)> = Vec::new();
        let mut pos = 0usize;
        for piece in row {
            let need = piece.arity_in(&d.coupons);
            if pos + need > strands.len() {
                return Err(DiagramError::Type {
                    slice: si,
                    pos,
                    msg: "row consumes more strands than available".into(),
                });
            }
            let ins = &strands[pos..pos + need];
            match piece {
                Piece::Id => next.push(ins[0].clone()),
                Piece::TwistPos | Piece::TwistNeg => {
                    let delta = if matches!(piece, Piece::TwistPos) { 1 } else { -1 };
                    let r = uf.find(ins[0].1);
                    raws[r].twists += delta;
                    next.push(ins[0].clone());
                }
                Piece::CrossPos | Piece::CrossNeg => {
                    let (a, b) = (&ins[0], &ins[1]);
                    if a.0.chrome == Chrome::Red && b.0.chrome == Chrome::Red {
                        let sign = if matches!(piece, Piece::CrossPos) { 1 } else { -1 };
                        let orient = if a.0.dir == b.0.dir { 1 } else { -1 };
                        red_crossings.push((uf.find(a.1), uf.find(b.1), sign * orient));
                    }
                    next.push(b.clone());
                    next.push(a.clone());
                }
                Piece::CapLeft | Piece::CapRight => {
                    let (a, b) = (&ins[0], &ins[1]);
                    let want = if matches!(piece, Piece::CapLeft) {
                        (Dir::Down, Dir::Up)
                    } else {
                        (Dir::Up, Dir::Down)
                    };
                    if a.0.chrome != b.0.chrome || a.0.color != b.0.color {
                        return Err(DiagramError::Type {
                            slice: si,
                            pos,
                            msg: format!(
                                "cap joins incompatible strands {:?}/{} and {:?}/{}",
                                a.0.chrome, a.0.color, b.0.chrome, b.0.color
                            ),
                        });
                    }
                    if (a.0.dir, b.0.dir) != want {
                        return Err(DiagramError::Type {
                            slice: si,
                            pos,
                            msg: "cap orientation mismatch".into(),
                        });
                    }
                    uf.union(a.1, b.1);
                    let r = uf.find(a.1);
                    if matches!(piece, Piece::CapRight) {
                        raws[r].net_right += 1;
                    }
                }
                Piece::CupLeft(p) | Piece::CupRight(p) => {
                    let id = fresh(&mut uf, &mut raws, p, false);
                    let is_left = matches!(piece, Piece::CupLeft(_));
                    if !is_left {
                        raws[id].net_right -= 1;
                    }
                    if raws[id].first_cup.is_none() {
                        raws[id].first_cup = Some((si, next.len(), is_left));
                    }
                    let (l, r) = if is_left {
                        (p.clone(), p.flipped())
                    } else {
                        (p.flipped(), p.clone())
                    };
                    // Both legs carry up-orientation semantics of the same
                    // edge; enforce the stated leg pattern.
                    let (lp, rp) = match (l.dir, r.dir) {
                        (Dir::Up, Dir::Down) | (Dir::Down, Dir::Up) => (l, r),
                        _ => unreachable!(),
                    };
                    next.push((lp, id));
                    next.push((rp, id));
                }
                Piece::Coupon { label } => {
                    let spec = d.coupons.get(label).ok_or_else(|| {
                        DiagramError::Coupon(label.clone(), "undefined coupon".into())
                    })?;
                    for (k, (want, got)) in spec.inputs.iter().zip(ins).enumerate() {
                        if want != &got.0 {
                            return Err(DiagramError::Type {
                                slice: si,
                                pos: pos + k,
                                msg: format!("coupon {label} input {k} type mismatch"),
                            });
                        }
                    }
                    let k_red = spec.inputs.iter().take_while(|p| p.chrome == Chrome::Red).count();
                    for (k, out) in spec.outputs.iter().enumerate() {
                        if k < k_red {
                            // Red legs pass straight through for smoothing.
                            next.push((out.clone(), ins[k].1));
                        } else {
                            let id = fresh(&mut uf, &mut raws, out, false);
                            next.push((out.clone(), id));
                        }
                    }
                }
            }
            pos += need;
        }
        if pos != strands.len() {
            return Err(DiagramError::Type {
                slice: si,
                pos,
                msg: "row leaves strands unconsumed".into(),
            });
        }
        strands = next;
        levels.push(strands.iter().map(|(p, _)| p.clone()).collect());
        edge_levels.push(strands.iter().map(|(_, e)| *e).collect());
        record_up(&mut raws, &mut uf, &strands, si + 1);
    }

    let top_types: Vec<Point> = strands.iter().map(|(p, _)| p.clone()).collect();
    if top_types != d.top {
        return Err(DiagramError::Type {
            slice: d.slices.len(),
            pos: 0,
            msg: format!("top boundary mismatch: inferred {top_types:?}"),
        });
    }
    for (_, id) in &strands {
        let r = uf.find(*id);
        raws[r].touches_boundary = true;
    }

    // Canonicalize union-find classes, merging accumulated data.
    let mut canon: BTreeMap<usize, usize> = BTreeMap::new();
    let mut edges: Vec<EdgeInfo> = Vec::new();
    let n_raw = raws.len();
    let mut merged: Vec<Raw> = raws.clone();
    for i in 0..n_raw {
        let r = uf.find(i);
        if r != i {
            merged[r].net_right += raws[i].net_right;
            merged[r].twists += raws[i].twists;
            merged[r].touches_boundary |= raws[i].touches_boundary;
            if merged[r].up_point.is_none() || raws[i].up_point < merged[r].up_point {
                if raws[i].up_point.is_some() {
                    merged[r].up_point = raws[i].up_point;
                }
            }
            if merged[r].first_cup.is_none() || (raws[i].first_cup.is_some() && raws[i].first_cup < merged[r].first_cup) {
                if raws[i].first_cup.is_some() {
                    merged[r].first_cup = raws[i].first_cup;
                }
            }
        }
    }
    for i in 0..n_raw {
        if uf.find(i) == i {
            canon.insert(i, edges.len());
            let m = &merged[i];
            edges.push(EdgeInfo {
                chrome: m.chrome,
                color: m.color.clone(),
                closed: !m.touches_boundary,
                net_right: m.net_right,
                twists: m.twists,
                up_point: m.up_point,
                first_cup: m.first_cup,
            });
        }
    }
    let edge_levels = edge_levels
        .into_iter()
        .map(|lvl| lvl.into_iter().map(|e| canon[&uf.find(e)]).collect())
        .collect();
    let red_crossings = red_crossings
        .into_iter()
        .map(|(a, b, s)| (canon[&uf.find(a)], canon[&uf.find(b)], s))
        .collect();
    Ok(Analysis {
        levels,
        edge_levels,
        edges,
        red_crossings,
    })
}

impl Diagram {
    pub fn is_closed(&self) -> bool {
        self.bottom.is_empty() && self.top.is_empty()
    }
}

/// The red tangle left after deleting blue edges and passing red legs
/// through coupons.
#[derive(Debug, Clone)]
pub struct Smoothing {
    /// Edge ids of closed red components.
    pub cycles: Vec<usize>,
    /// Edge ids of red components reaching the boundary.
    pub relative_cycles: Vec<usize>,
}

pub fn smoothing(a: &Analysis) -> Smoothing {
    let mut cycles = Vec::new();
    let mut relative = Vec::new();
    for (i, e) in a.edges.iter().enumerate() {
        if e.chrome == Chrome::Red {
            if e.closed {
                cycles.push(i);
            } else {
                relative.push(i);
            }
        }
    }
    Smoothing {
        cycles,
        relative_cycles: relative,
    }
}

/// Resolve a named color into a module.
pub fn resolve_rep(
    h: &HopfData<Cyc>,
    colors: &BTreeMap<String, ColorSpec>,
    name: &str,
) -> Result<Rep<Cyc>, DiagramError> {
    if name == "H" {
        return Ok(regular_rep(h));
    }
    let spec = colors
        .get(name)
        .ok_or_else(|| DiagramError::UnknownColor(name.to_string()))?;
    build_rep(h, colors, spec)
}

pub fn build_rep(
    h: &HopfData<Cyc>,
    colors: &BTreeMap<String, ColorSpec>,
    spec: &ColorSpec,
) -> Result<Rep<Cyc>, DiagramError> {
    Ok(match spec {
        ColorSpec::Regular => regular_rep(h),
        ColorSpec::Trivial => trivial_rep(h),
        ColorSpec::DualCoadjoint => dual_coadjoint_x(h)
            .map_err(|e| DiagramError::UnknownColor(format!("dual-coadjoint: {e}")))?,
        ColorSpec::Dual(inner) => dual_rep(h, &resolve_rep(h, colors, inner)?),
        ColorSpec::Tensor(names) => {
            let mut it = names.iter();
            let first = it.next().ok_or_else(|| {
                DiagramError::UnknownColor("empty tensor color".into())
            })?;
            let mut acc = resolve_rep(h, colors, first)?;
            for n in it {
                acc = tensor_rep(h, &acc, &resolve_rep(h, colors, n)?);
            }
            acc
        }
    })
}

/// A closed diagram is admissible when some blue edge carries a
/// projective color.
pub fn is_admissible(d: &Diagram, h: &HopfData<Cyc>) -> Result<bool, DiagramError> {
    if !d.is_closed() {
        return Err(DiagramError::NotClosed);
    }
    let a = analyze(d)?;
    let mut seen: BTreeMap<String, bool> = BTreeMap::new();
    for e in &a.edges {
        if e.chrome == Chrome::Blue {
            let proj = match seen.get(&e.color) {
                Some(p) => *p,
                None => {
                    let rep = resolve_rep(h, &d.colors, &e.color)?;
                    let p = is_projective(h, &rep);
                    seen.insert(e.color.clone(), p);
                    p
                }
            };
            if proj {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Linking data of the red part.
#[derive(Debug, Clone)]
pub struct LinkData {
    pub components: Vec<usize>,
    pub matrix: Vec<Vec<i64>>,
    pub signature: i64,
}

pub fn linking_data(a: &Analysis) -> Result<LinkData, DiagramError> {
    let sm = smoothing(a);
    if !sm.relative_cycles.is_empty() {
        return Err(DiagramError::RelativeRedCycles);
    }
    let comps = sm.cycles;
    let idx: BTreeMap<usize, usize> = comps.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let l = comps.len();
    // Twice the linking form, to stay integral while accumulating.
    let mut twice = vec![vec![0i64; l]; l];
    for &(ea, eb, s) in &a.red_crossings {
        let (i, j) = (idx[&ea], idx[&eb]);
        twice[i][j] += s;
        if i != j {
            twice[j][i] += s;
        }
    }
    let mut matrix = vec![vec![0i64; l]; l];
    for i in 0..l {
        for j in 0..l {
            if i == j {
                // Writhe (each self-crossing event counted once) plus
                // explicit twist framing.
                let self_cross = twice[i][i];
                matrix[i][i] = self_cross + a.edges[comps[i]].twists;
            } else {
                if twice[i][j] % 2 != 0 {
                    return Err(DiagramError::Signature(
                        "odd inter-component crossing count".into(),
                    ));
                }
                matrix[i][j] = twice[i][j] / 2;
            }
        }
    }
    let rat: Vec<Vec<Rat>> = matrix
        .iter()
        .map(|row| row.iter().map(|&x| Rat::from(num_bigint::BigInt::from(x))).collect())
        .collect();
    let signature = signature_symmetric(&rat).map_err(|e| DiagramError::Signature(e.to_string()))?;
    Ok(LinkData {
        components: comps,
        matrix,
        signature,
    })
}

// ---- builders -----------------------------------------------------------

/// A round unknot of the given chrome/color with explicit twist framing.
pub fn unknot(chrome: Chrome, color: &str, twists: i64) -> Diagram {
    let p = Point {
        dir: Dir::Up,
        chrome,
        color: color.into(),
    };
    let mut slices = vec![vec![Piece::CupLeft(p)]];
    for _ in 0..twists.unsigned_abs() {
        slices.push(vec![
            if twists > 0 { Piece::TwistPos } else { Piece::TwistNeg },
            Piece::Id,
        ]);
    }
    slices.push(vec![Piece::CapRight]);
    Diagram {
        colors: default_colors(),
        bottom: vec![],
        top: vec![],
        slices,
        coupons: BTreeMap::new(),
    }
}

fn default_colors() -> BTreeMap<String, ColorSpec> {
    let mut m = BTreeMap::new();
    m.insert("H".into(), ColorSpec::Regular);
    m.insert("triv".into(), ColorSpec::Trivial);
    m.insert("X".into(), ColorSpec::DualCoadjoint);
    m
}

/// Two round circles linked once; `positive` selects the handedness.
pub fn hopf_link(c1: Chrome, color1: &str, c2: Chrome, color2: &str, positive: bool) -> Diagram {
    let p1 = Point {
        dir: Dir::Up,
        chrome: c1,
        color: color1.into(),
    };
    let p2 = Point {
        dir: Dir::Up,
        chrome: c2,
        color: color2.into(),
    };
    let x = if positive { Piece::CrossNeg } else { Piece::CrossPos };
    Diagram {
        colors: default_colors(),
        bottom: vec![],
        top: vec![],
        slices: vec![
            vec![Piece::CupLeft(p1), Piece::CupLeft(p2)],
            vec![Piece::Id, x.clone(), Piece::Id],
            vec![Piece::Id, x, Piece::Id],
            vec![Piece::CapRight, Piece::CapRight],
        ],
        coupons: BTreeMap::new(),
    }
}

/// Braid-closure trefoil on a single component.
pub fn trefoil(chrome: Chrome, color: &str, positive: bool) -> Diagram {
    let p = Point {
        dir: Dir::Up,
        chrome,
        color: color.into(),
    };
    let x = if positive { Piece::CrossNeg } else { Piece::CrossPos };
    Diagram {
        colors: default_colors(),
        bottom: vec![],
        top: vec![],
        slices: vec![
            vec![Piece::CupLeft(p.clone()), Piece::CupLeft(p)],
            vec![Piece::Id, x.clone(), Piece::Id],
            vec![Piece::Id, x.clone(), Piece::Id],
            vec![Piece::Id, x, Piece::Id],
            vec![Piece::Id, Piece::CapRight, Piece::Id],
            vec![Piece::CapRight],
        ],
        coupons: BTreeMap::new(),
    }
}

/// A 0-framed red unknot with a meridian of the given chrome/color.
pub fn meridian_pair(mer_chrome: Chrome, mer_color: &str) -> Diagram {
    hopf_link(Chrome::Red, "H", mer_chrome, mer_color, true)
}

/// A red curve carrying `framing` explicit twists (the image of a surface
/// curve with the homology-determined framing).
pub fn dehn_twist_curve(framing: i64) -> Diagram {
    unknot(Chrome::Red, "H", framing)
}

/// A closed blue circle decorated with one coupon.
pub fn decorated_unknot(color: &str, label: &str, spec: CouponSpec) -> Diagram {
    let p = Point {
        dir: Dir::Up,
        chrome: Chrome::Blue,
        color: color.into(),
    };
    let mut coupons = BTreeMap::new();
    coupons.insert(label.to_string(), spec);
    Diagram {
        colors: default_colors(),
        bottom: vec![],
        top: vec![],
        slices: vec![
            vec![Piece::CupLeft(p)],
            vec![Piece::Coupon { label: label.into() }, Piece::Id],
            vec![Piece::CapRight],
        ],
        coupons,
    }
}

/// The standard 1-in 1-out coupon on a blue strand.
pub fn endo_coupon(color: &str, morphism: MorphismSpec) -> CouponSpec {
    let p = Point {
        dir: Dir::Up,
        chrome: Chrome::Blue,
        color: color.into(),
    };
    CouponSpec {
        inputs: vec![p.clone()],
        outputs: vec![p],
        morphism,
    }
}

/// Cutting presentation: remove the lowest cup of the chosen closed blue
/// edge, exposing its two legs as bottom/top boundary. Supported for
/// diagrams where that cup is in the first slice and the legs occupy the
/// outermost positions throughout (single-cycle shapes).
pub fn cut_presentation(d: &Diagram, h: &HopfData<Cyc>, edge: usize) -> Result<Diagram, DiagramError> {
    if !d.is_closed() {
        return Err(DiagramError::NotClosed);
    }
    let a = analyze(d)?;
    let info = a
        .edges
        .get(edge)
        .ok_or(DiagramError::NotProjectiveBlue(edge))?;
    if info.chrome != Chrome::Blue || !info.closed {
        return Err(DiagramError::NotProjectiveBlue(edge));
    }
    let rep = resolve_rep(h, &d.colors, &info.color)?;
    if !is_projective(h, &rep) {
        return Err(DiagramError::NotProjectiveBlue(edge));
    }
    let (slice, pos, is_left) = info
        .first_cup
        .ok_or_else(|| DiagramError::CutUnsupported("edge has no cup".into()))?;
    if !is_left || pos != 0 {
        return Err(DiagramError::CutUnsupported(
            "supported cut point is a leftmost cup_left".into(),
        ));
    }
    // Drop the cup: its up leg becomes the bottom boundary; the down leg
    // must exit at the top, which works when the final cap closing the
    // edge is the leftmost piece of the last slice. We realize the cut by
    // removing the cup and the matching level-0 cap, turning the diagram
    // into an endomorphism of (+, V).
    let mut slices = d.slices.clone();
    let row = &mut slices[slice];
    if !matches!(row.first(), Some(Piece::CupLeft(_))) {
        return Err(DiagramError::CutUnsupported("cup not leftmost in its slice".into()));
    }
    row.remove(0);
    // Find the closing cap of this edge: leftmost cap in the last slice.
    let last = slices.len() - 1;
    if !matches!(slices[last].first(), Some(Piece::CapRight)) {
        return Err(DiagramError::CutUnsupported(
            "closing cap_right not leftmost in the final slice".into(),
        ));
    }
    slices[last].remove(0);
    for r in slices.iter_mut() {
        if r.is_empty() {
            r.push(Piece::Id);
        }
    }
    // Rows between cup and cap act with the two cut legs at the left; the
    // up leg (boundary) stays at position 0, the down leg at position 1
    // is replaced by routing: for the supported single-cycle shapes the
    // inner rows already start with Id/coupon pieces on those legs.
    let pt = Point {
        dir: Dir::Up,
        chrome: Chrome::Blue,
        color: info.color.clone(),
    };
    let mut cut = Diagram {
        colors: d.colors.clone(),
        bottom: vec![pt.clone()],
        top: vec![pt],
        slices: Vec::new(),
        coupons: d.coupons.clone(),
    };
    // The down leg between the removed cup and cap would close trivially:
    // delete it by removing the trailing Id pieces it occupied.
    for (ri, r) in slices.iter().enumerate() {
        let mut row = r.clone();
        if ri >= slice && ri < last {
            // Drop the strand that was the cup's down leg (rightmost of
            // the two cut strands) from pure-Id padding.
            if let Some(ix) = row.iter().rposition(|p| matches!(p, Piece::Id)) {
                row.remove(ix);
            } else {
                return Err(DiagramError::CutUnsupported(
                    "inner slice entangles the cut legs".into(),
                ));
            }
        }
        if !row.is_empty() {
            cut.slices.push(row);
        }
    }
    analyze(&cut)?;
    Ok(cut)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknot_analysis() {
        let d = unknot(Chrome::Red, "H", 1);
        let a = analyze(&d).unwrap();
        let sm = smoothing(&a);
        assert_eq!(sm.cycles.len(), 1);
        assert!(sm.relative_cycles.is_empty());
        let lk = linking_data(&a).unwrap();
        assert_eq!(lk.matrix, vec![vec![1]]);
        assert_eq!(lk.signature, 1);
        assert_eq!(a.edges[sm.cycles[0]].net_right, 1);
    }

    #[test]
    fn hopf_and_disjoint_links() {
        let d = hopf_link(Chrome::Red, "H", Chrome::Red, "H", true);
        let a = analyze(&d).unwrap();
        let lk = linking_data(&a).unwrap();
        assert_eq!(lk.matrix.len(), 2);
        assert_eq!(lk.matrix[0][1], 1);
        assert_eq!(lk.matrix[1][0], 1);
        assert_eq!(lk.matrix[0][0], 0);
        assert_eq!(lk.signature, 0);

        let neg = hopf_link(Chrome::Red, "H", Chrome::Red, "H", false);
        let lkn = linking_data(&analyze(&neg).unwrap()).unwrap();
        assert_eq!(lkn.matrix[0][1], -1);

        // Disjoint +1 and -1 unknots.
        let mut d1 = unknot(Chrome::Red, "H", 1);
        let d2 = unknot(Chrome::Red, "H", -1);
        let off = d1.slices.len();
        for (i, row) in d2.slices.iter().enumerate() {
            if let Some(r) = d1.slices.get_mut(i) {
                r.extend(row.clone());
            } else {
                let _ = off;
                d1.slices.push(row.clone());
            }
        }
        let lk2 = linking_data(&analyze(&d1).unwrap()).unwrap();
        assert_eq!(lk2.matrix.len(), 2);
        assert_eq!(lk2.signature, 0);
    }

    #[test]
    fn trefoil_writhe() {
        let d = trefoil(Chrome::Red, "H", true);
        let a = analyze(&d).unwrap();
        let sm = smoothing(&a);
        assert_eq!(sm.cycles.len(), 1, "braid closure of sigma^3 is one component");
        let lk = linking_data(&a).unwrap();
        assert_eq!(lk.matrix[0][0].abs(), 3);
    }

    #[test]
    fn type_errors() {
        // Cap joining strands of different colors.
        let mut d = unknot(Chrome::Red, "H", 0);
        d.slices.insert(
            1,
            vec![
                Piece::CapLeft, // (up, down) pair fed to a left cap: orientation mismatch
            ],
        );
        assert!(matches!(analyze(&d), Err(DiagramError::Type { .. })));

        // Coupon with a blue leg before a red leg.
        let mut coupons = BTreeMap::new();
        coupons.insert(
            "bad".to_string(),
            CouponSpec {
                inputs: vec![Point::blue("H"), Point::red_h()],
                outputs: vec![Point::blue("H"), Point::red_h()],
                morphism: MorphismSpec::Builtin("epsilon".into()),
            },
        );
        let d2 = Diagram {
            colors: default_colors(),
            bottom: vec![],
            top: vec![],
            slices: vec![],
            coupons,
        };
        assert!(matches!(analyze(&d2), Err(DiagramError::Coupon(..))));
    }

    #[test]
    fn smoothing_classification() {
        // Open red strand: relative cycle.
        let d = Diagram {
            colors: default_colors(),
            bottom: vec![Point::red_h()],
            top: vec![Point::red_h()],
            slices: vec![vec![Piece::Id]],
            coupons: BTreeMap::new(),
        };
        let a = analyze(&d).unwrap();
        let sm = smoothing(&a);
        assert!(sm.cycles.is_empty());
        assert_eq!(sm.relative_cycles.len(), 1);
        assert!(linking_data(&a).is_err());

        // Blue-only trefoil: empty smoothing.
        let b = trefoil(Chrome::Blue, "H", true);
        let sm2 = smoothing(&analyze(&b).unwrap());
        assert!(sm2.cycles.is_empty() && sm2.relative_cycles.is_empty());
    }

    #[test]
    fn red_legs_pass_through_coupons() {
        // Red unknot with an L_z coupon on it: still one red cycle.
        let mut coupons = BTreeMap::new();
        coupons.insert(
            "Lz".to_string(),
            CouponSpec {
                inputs: vec![Point::red_h()],
                outputs: vec![Point::red_h()],
                morphism: MorphismSpec::Lz("K".into()),
            },
        );
        let d = Diagram {
            colors: default_colors(),
            bottom: vec![],
            top: vec![],
            slices: vec![
                vec![Piece::CupLeft(Point::red_h())],
                vec![Piece::Coupon { label: "Lz".into() }, Piece::Id],
                vec![Piece::CapRight],
            ],
            coupons,
        };
        let a = analyze(&d).unwrap();
        assert_eq!(smoothing(&a).cycles.len(), 1);
    }

    #[test]
    fn json_round_trip() {
        let d = hopf_link(Chrome::Red, "H", Chrome::Blue, "H", true);
        let s = serde_json::to_string_pretty(&d).unwrap();
        let back = parse_diagram(&s).unwrap();
        assert_eq!(d, back);
    }
}
