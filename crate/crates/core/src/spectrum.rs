//! Band structure on the real axis: bands σₙ with their case tags, gaps, and the
//! set 𝔖₄ where both Lyapunov branches lie in [−1, 1].
//!
//! The real axis is cut at every real zero of D₊, D₋ and ρ. On each elementary
//! segment the set of branches inside (−1, 1) is constant. Branch pieces on adjacent
//! segments are joined across a cut according to what the cut is: a branch that
//! reaches ±1 ends there, a simple resonance turns the two branches into each other,
//! and a double resonance lets them pass with their roles exchanged. Each connected
//! family of pieces is one band.

use crate::coeffs::{CoefficientSet, TrigSeries};
use crate::discriminants::{bundle_with, bundle_with_derivative, DiscriminantBundle};
use crate::error::{Error, Result};
use crate::monodromy::{IntegratorOptions, CLAMP_X};
use crate::reference::{s_of_lambda, SpectralPoint};
use crate::zeros::{
    label_eigenvalues, label_resonances, zero_table, ContourSpec, LabelSign, LocatedZero, Shape,
    ZeroFunction, ZeroSolver, ZeroTableEntry,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;

pub const SCHEMA_VERSION: &str = "floquet4.spectrum/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointKind {
    Periodic,
    Antiperiodic,
    Resonance,
    /// The band continues past the requested λ range.
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub lambda: f64,
    pub kind: EndpointKind,
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandCase {
    I1,
    I2,
    I3,
}

/// One of the two analytic arcs σₙ∓ of a band with a resonance endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubArc {
    pub interval: [f64; 2],
    pub ends: [Endpoint; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub n: usize,
    pub closure: [f64; 2],
    /// Usually one tag; a band with resonance turns at both ends carries both.
    pub case_tags: Vec<BandCase>,
    pub endpoints: [Endpoint; 2],
    pub sub_arcs: Vec<SubArc>,
}

impl Band {
    pub fn contains(&self, lambda: f64) -> bool {
        self.closure[0] <= lambda && lambda <= self.closure[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub coefficients_sha256: String,
    pub tol_ode: f64,
    pub tol_root: f64,
    pub coincidence_rtol: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub schema_version: String,
    pub bands: Vec<Band>,
    pub gaps: Vec<[f64; 2]>,
    pub mult4: Vec<[f64; 2]>,
    pub eigen_table: Vec<ZeroTableEntry>,
    pub resonance_table: Vec<ZeroTableEntry>,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssembleOptions {
    pub tol_ode: f64,
    pub tol_root: f64,
    /// Breakpoints closer than this (relative to max(1, |λ|)) are one point.
    pub coincidence_rtol: f64,
    /// Indicator samples per unit of s = sign(λ)|λ|^{1/4} used to confirm each segment.
    pub scan_per_unit_s: f64,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        Self { tol_ode: 1e-12, tol_root: 1e-14, coincidence_rtol: 1e-12, scan_per_unit_s: 40.0 }
    }
}

fn sup_bound(s: &TrigSeries) -> f64 {
    s.constant.abs() + s.cos.iter().chain(&s.sin).map(|v| v.abs()).sum::<f64>()
}

/// A λ below the whole spectrum: ⟨Hy, y⟩ ≥ −(‖p‖²∞/4 + ‖q‖∞)‖y‖².
pub fn spectrum_lower_bound(c: &CoefficientSet) -> f64 {
    let p = sup_bound(&c.p);
    -(p * p / 4.0 + sup_bound(&c.q)) - 1.0
}

pub fn coefficient_hash(c: &CoefficientSet) -> String {
    Sha256::digest(c.to_json().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Zeros of one function lying on the real axis.
#[derive(Debug, Clone, Copy)]
struct Cut {
    lambda: f64,
    periodic: Option<LocatedZero>,
    antiperiodic: Option<LocatedZero>,
    resonance: Option<LocatedZero>,
}

impl Cut {
    fn eigen(&self) -> Option<(EndpointKind, LocatedZero)> {
        self.periodic
            .map(|z| (EndpointKind::Periodic, z))
            .or(self.antiperiodic.map(|z| (EndpointKind::Antiperiodic, z)))
    }
}

#[derive(Debug, Clone)]
struct Segment {
    a: f64,
    b: f64,
    real: bool,
    /// inside[ν−1]: branch Δν lies in (−1, 1) on the segment.
    inside: [bool; 2],
}

impl Segment {
    fn count(&self) -> u8 {
        2 * (self.inside[0] as u8 + self.inside[1] as u8)
    }
}

fn branches_inside(b: &DiscriminantBundle) -> [bool; 2] {
    let ok = |d: Complex64| b.branch_real && d.re > -1.0 && d.re < 1.0;
    [ok(b.delta1), ok(b.delta2)]
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut j = i;
        while self.0[j] != r {
            let next = self.0[j];
            self.0[j] = r;
            j = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Real zeros of f in [lo, hi], searched in a thin box around the axis so that
/// numerically split double zeros are still captured.
fn real_zeros(solver: &ZeroSolver<'_>, f: ZeroFunction, lo: f64, hi: f64, warnings: &mut Vec<String>) -> Result<Vec<LocatedZero>> {
    let height = (2e-3 * lo.abs().max(hi.abs())).max(1.0);
    let mut last = None;
    for k in 0..6 {
        let top = hi + (k as f64) * 0.0137 * hi.abs().max(1.0) * 1e-3;
        match solver.zeros_in_rect(f, Complex64::new(lo, -height), Complex64::new(top, height)) {
            Ok(zs) => {
                let mut out = Vec::new();
                for z in zs {
                    if z.lambda.re > hi {
                        continue;
                    }
                    if z.is_real() {
                        out.push(z);
                    } else if f != ZeroFunction::Rho && z.lambda.im.abs() > 0.0 {
                        warnings.push(format!("non-real {:?} zero at {}", f, z.lambda));
                    }
                }
                return Ok(out);
            }
            Err(e @ (Error::ContourThroughZero(_) | Error::Subdivision { .. })) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn endpoint_from_cut(cut: &Cut, uturn: bool) -> Result<Endpoint> {
    let label = |z: &LocatedZero| z.label.map(|l| l.to_string());
    if uturn {
        let r = cut.resonance.expect("turns happen at resonances");
        return Ok(Endpoint { lambda: cut.lambda, kind: EndpointKind::Resonance, label: label(&r) });
    }
    match cut.eigen() {
        Some((kind, z)) => Ok(Endpoint { lambda: cut.lambda, kind, label: label(&z) }),
        None => Err(Error::Resolution(format!(
            "a band ends at λ = {} which is neither an eigenvalue nor a turning resonance",
            cut.lambda
        ))),
    }
}

/// Candidate band index implied by an eigenvalue endpoint: λₙ₋₁⁺ on the left, λₙ⁻ on the right.
fn index_candidates(ep: &Endpoint, cut: Option<&Cut>, is_left_of_arc: bool) -> Vec<usize> {
    let Some(cut) = cut else { return Vec::new() };
    let Some((_, z)) = cut.eigen() else { return Vec::new() };
    let Some(l) = z.label else { return Vec::new() };
    if ep.kind == EndpointKind::Resonance {
        return Vec::new();
    }
    match l.sign {
        LabelSign::Minus => vec![l.n],
        LabelSign::Plus => vec![l.n + 1],
        LabelSign::Both => {
            if is_left_of_arc {
                vec![l.n + 1]
            } else {
                vec![l.n]
            }
        }
    }
}

struct Chain {
    pieces: Vec<(usize, usize)>,
    turns: Vec<usize>,
}

/// Assemble the band structure of H on [spectrum bottom, lambda_max].
pub fn assemble(c: &CoefficientSet, lambda_max: f64) -> Result<SpectrumReport> {
    assemble_with(c, lambda_max, &AssembleOptions::default())
}

pub fn assemble_with(c: &CoefficientSet, lambda_max: f64, opts: &AssembleOptions) -> Result<SpectrumReport> {
    let lambda_min = spectrum_lower_bound(c);
    if !(lambda_max > lambda_min) {
        return Err(Error::Precondition(format!("lambda_max must exceed {lambda_min}")));
    }
    for l in [lambda_max, lambda_min] {
        let x = SpectralPoint::real(l).x();
        if x > CLAMP_X {
            return Err(Error::Clamp { lambda: Complex64::new(l, 0.0), x, clamp: CLAMP_X });
        }
    }
    let solver = ZeroSolver::with_tolerances(c, opts.tol_ode, opts.tol_root);
    let iopts = IntegratorOptions::fast(opts.tol_ode);
    let mut warnings = Vec::new();

    let mut periodic = real_zeros(&solver, ZeroFunction::Dplus, lambda_min, lambda_max, &mut warnings)?;
    let mut antiperiodic = real_zeros(&solver, ZeroFunction::Dminus, lambda_min, lambda_max, &mut warnings)?;
    let real_res = real_zeros(&solver, ZeroFunction::Rho, lambda_min, lambda_max, &mut warnings)?;
    label_eigenvalues(&mut periodic, true);
    label_eigenvalues(&mut antiperiodic, false);
    let resonances = label_real_resonances(&solver, real_res, lambda_min, &mut warnings)?;

    let tol = |l: f64| opts.coincidence_rtol * l.abs().max(1.0);
    let mut cuts: Vec<Cut> = Vec::new();
    let mut insert = |z: &LocatedZero| {
        let l = z.lambda.re;
        let cut = match cuts.iter_mut().find(|k| (k.lambda - l).abs() <= tol(l)) {
            Some(k) => k,
            None => {
                cuts.push(Cut { lambda: l, periodic: None, antiperiodic: None, resonance: None });
                cuts.last_mut().expect("just pushed")
            }
        };
        match z.which {
            ZeroFunction::Dplus => cut.periodic = Some(*z),
            ZeroFunction::Dminus => cut.antiperiodic = Some(*z),
            ZeroFunction::Rho => cut.resonance = Some(*z),
        }
    };
    periodic.iter().chain(&antiperiodic).chain(&resonances).for_each(&mut insert);
    cuts.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));

    // elementary segments [lambda_min, c₀], [c₀, c₁], ..., [c_last, lambda_max]
    let mut edges = vec![lambda_min];
    edges.extend(cuts.iter().map(|k| k.lambda));
    edges.push(lambda_max);
    let mut segments = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let bm = bundle_with(c, &SpectralPoint::real(mid), &iopts)?;
        let seg = Segment { a, b, real: bm.branch_real, inside: branches_inside(&bm) };
        confirm_segment(c, &seg, &iopts, opts.scan_per_unit_s)?;
        segments.push(seg);
    }

    // Joins across each cut. Piece index = 2·segment + (ν − 1).
    let piece = |k: usize, nu: usize| 2 * k + nu;
    let mut uf = UnionFind((0..2 * segments.len()).collect());
    let mut turn_at: Vec<Option<usize>> = vec![None; cuts.len()];
    let mut continues: Vec<[bool; 2]> = vec![[false; 2]; 2 * segments.len()]; // [left joined, right joined]
    for (i, cut) in cuts.iter().enumerate() {
        let (l, r) = (i, i + 1);
        let (sl, sr) = (&segments[l], &segments[r]);
        let touching = touching_branches(c, cut, &iopts)?;
        let free = |nu: usize| !touching[nu];
        let mut join = |a: usize, b: usize, cont: &mut Vec<[bool; 2]>| {
            uf.union(a, b);
            cont[a][1] = true;
            cont[b][0] = true;
        };
        if cut.resonance.is_some() && (sl.real != sr.real) {
            let (side, k) = if sl.real { (sl, l) } else { (sr, r) };
            if side.inside[0] && side.inside[1] && free(0) && free(1) {
                uf.union(piece(k, 0), piece(k, 1));
                let slot = if sl.real { 1 } else { 0 };
                continues[piece(k, 0)][slot] = true;
                continues[piece(k, 1)][slot] = true;
                turn_at[i] = Some(k);
            }
        } else if sl.real && sr.real {
            let swap = cut.resonance.is_some_and(|z| z.multiplicity >= 2);
            for nu in 0..2 {
                let mu = if swap { 1 - nu } else { nu };
                if sl.inside[nu] && sr.inside[mu] && free(nu) && free(mu) {
                    join(piece(l, nu), piece(r, mu), &mut continues);
                }
            }
        }
    }

    // Collect chains.
    let mut chains: Vec<Chain> = Vec::new();
    let mut root_index = std::collections::BTreeMap::new();
    for (k, seg) in segments.iter().enumerate() {
        for nu in 0..2 {
            if !seg.inside[nu] {
                continue;
            }
            let root = uf.find(piece(k, nu));
            let idx = *root_index.entry(root).or_insert_with(|| {
                chains.push(Chain { pieces: Vec::new(), turns: Vec::new() });
                chains.len() - 1
            });
            chains[idx].pieces.push((k, nu));
        }
    }
    for (i, t) in turn_at.iter().enumerate() {
        if let Some(k) = t {
            let root = uf.find(piece(*k, 0));
            if let Some(&idx) = root_index.get(&root) {
                chains[idx].turns.push(i);
            }
        }
    }

    let mut bands = Vec::with_capacity(chains.len());
    for chain in &chains {
        bands.push(build_band(chain, &segments, &cuts, &continues, lambda_max)?);
    }
    bands.sort_by(|a, b| a.closure[0].total_cmp(&b.closure[0]).then(a.closure[1].total_cmp(&b.closure[1])));
    assign_indices(&mut bands, &cuts);

    let mult4 = merge_intervals(segments.iter().filter(|s| s.count() == 4).map(|s| [s.a, s.b]));
    let spectrum = merge_intervals(segments.iter().filter(|s| s.count() > 0).map(|s| [s.a, s.b]));
    let gaps = spectrum.windows(2).map(|w| [w[0][1], w[1][0]]).collect();

    let mut eigen: Vec<LocatedZero> = periodic.iter().chain(&antiperiodic).copied().collect();
    eigen.sort_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re));
    Ok(SpectrumReport {
        schema_version: SCHEMA_VERSION.into(),
        bands,
        gaps,
        mult4,
        eigen_table: zero_table(&eigen),
        resonance_table: zero_table(&resonances),
        warnings,
        provenance: Provenance {
            coefficients_sha256: coefficient_hash(c),
            tol_ode: opts.tol_ode,
            tol_root: opts.tol_root,
            coincidence_rtol: opts.coincidence_rtol,
            lambda_min,
            lambda_max,
        },
    })
}

/// Labels for the real resonances from a disk enumeration of all ρ-zeros down to
/// the spectrum bound; unlabeled if that disk would cross the overflow clamp.
fn label_real_resonances(
    solver: &ZeroSolver<'_>,
    real: Vec<LocatedZero>,
    lambda_min: f64,
    warnings: &mut Vec<String>,
) -> Result<Vec<LocatedZero>> {
    if real.is_empty() {
        return Ok(real);
    }
    let top = real.iter().map(|z| z.lambda.re).fold(f64::NEG_INFINITY, f64::max);
    let radius = top.abs().max(lambda_min.abs()) * 1.01 + 1.0;
    let corner = (2f64.sqrt() * radius).powf(0.25);
    if corner > CLAMP_X {
        warnings.push("resonance labels skipped: labeling disk exceeds the overflow clamp".into());
        return Ok(real);
    }
    let all = solver.zeros_in_lambda_disk(ZeroFunction::Rho, radius)?;
    let (labeled, unlabeled) = label_resonances(all);
    if !unlabeled.is_empty() {
        warnings.push(format!("{} resonances could not be labeled", unlabeled.len()));
    }
    Ok(real
        .into_iter()
        .map(|mut z| {
            let near = labeled
                .iter()
                .filter(|w| w.is_real())
                .min_by(|a, b| (a.lambda - z.lambda).norm().total_cmp(&(b.lambda - z.lambda).norm()));
            if let Some(w) = near {
                if (w.lambda - z.lambda).norm() <= 1e-6 * z.lambda.norm().max(1.0) {
                    z.label = w.label;
                }
            }
            z
        })
        .collect())
}

/// Which branches reach ±1 at the cut (only at eigenvalues).
fn touching_branches(c: &CoefficientSet, cut: &Cut, opts: &IntegratorOptions) -> Result<[bool; 2]> {
    if cut.eigen().is_none() {
        return Ok([false; 2]);
    }
    let b = bundle_with(c, &SpectralPoint::real(cut.lambda), opts)?;
    let dist = |d: Complex64| ((d.re - 1.0).abs().min((d.re + 1.0).abs())) + d.im.abs();
    let d = [dist(b.delta1), dist(b.delta2)];
    let near = d[0].min(d[1]);
    let slack = 1e-6_f64.max(1.0001 * near);
    Ok([d[0] <= slack, d[1] <= slack])
}

/// Sample the indicator across a segment to catch a missed breakpoint.
fn confirm_segment(c: &CoefficientSet, seg: &Segment, opts: &IntegratorOptions, per_unit_s: f64) -> Result<()> {
    let width = s_of_lambda(seg.b) - s_of_lambda(seg.a);
    let n = ((per_unit_s * width).ceil() as usize).clamp(0, 400);
    for j in 1..n {
        let l = seg.a + (seg.b - seg.a) * j as f64 / n as f64;
        let b = bundle_with(c, &SpectralPoint::real(l), opts)?;
        let inside = branches_inside(&b);
        if inside != seg.inside {
            return Err(Error::Resolution(format!(
                "indicator changes inside [{}, {}] at λ = {l} with no zero of D± or ρ there; refine the zero search",
                seg.a, seg.b
            )));
        }
    }
    Ok(())
}

fn build_band(chain: &Chain, segs: &[Segment], cuts: &[Cut], cont: &[[bool; 2]], lambda_max: f64) -> Result<Band> {
    let a = chain.pieces.iter().map(|&(k, _)| segs[k].a).fold(f64::INFINITY, f64::min);
    let b = chain.pieces.iter().map(|&(k, _)| segs[k].b).fold(f64::NEG_INFINITY, f64::max);
    let cut_at = |l: f64| cuts.iter().find(|k| k.lambda == l);
    let end_at = |l: f64, uturn: bool| -> Result<Endpoint> {
        if l == lambda_max {
            return Ok(Endpoint { lambda: l, kind: EndpointKind::Truncated, label: None });
        }
        match cut_at(l) {
            Some(cut) => endpoint_from_cut(cut, uturn),
            None => Err(Error::Resolution(format!("band reaches λ = {l}, below the spectrum bound"))),
        }
    };
    let turn_lambdas: BTreeSet<u64> = chain.turns.iter().map(|&i| cuts[i].lambda.to_bits()).collect();
    let is_turn = |l: f64| turn_lambdas.contains(&l.to_bits());

    let mut tags = Vec::new();
    if chain.turns.is_empty() {
        tags.push(BandCase::I1);
    }
    let mut sub_arcs = Vec::new();
    if is_turn(a) {
        tags.push(BandCase::I2);
    }
    if is_turn(b) {
        tags.push(BandCase::I3);
    }
    if !chain.turns.is_empty() {
        // each strand: follow same-branch pieces away from the turn
        for nu in 0..2 {
            let mut ks: Vec<usize> = chain.pieces.iter().filter(|p| p.1 == nu).map(|p| p.0).collect();
            ks.sort_unstable();
            // strands may change branch across a double resonance; track by contiguous runs
            let runs = contiguous_runs(&ks);
            for (k0, k1) in runs {
                let (lo, hi) = (segs[k0].a, segs[k1].b);
                let ends = [end_at(lo, is_turn(lo))?, end_at(hi, is_turn(hi))?];
                if cont[2 * k0 + nu][0] && !is_turn(lo) || cont[2 * k1 + nu][1] && !is_turn(hi) {
                    continue; // part of a longer strand through a double resonance
                }
                sub_arcs.push(SubArc { interval: [lo, hi], ends });
            }
        }
        sub_arcs.sort_by(|x, y| x.interval[0].total_cmp(&y.interval[0]).then(x.interval[1].total_cmp(&y.interval[1])));
    }
    Ok(Band {
        n: 0,
        closure: [a, b],
        case_tags: tags,
        endpoints: [end_at(a, is_turn(a))?, end_at(b, is_turn(b))?],
        sub_arcs,
    })
}

fn contiguous_runs(ks: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut it = ks.iter().copied();
    if let Some(first) = it.next() {
        let (mut s, mut e) = (first, first);
        for k in it {
            if k == e + 1 {
                e = k;
            } else {
                out.push((s, e));
                s = k;
                e = k;
            }
        }
        out.push((s, e));
    }
    out
}

/// Band index from the eigenvalue labels at its strand ends, else by position.
fn assign_indices(bands: &mut [Band], cuts: &[Cut]) {
    let cut_at = |l: f64| cuts.iter().find(|k| k.lambda == l);
    let mut next = 1;
    for band in bands.iter_mut() {
        // one candidate set per eigenvalue end; a band of index n ends at λₙ₋₁⁺ and λₙ⁻
        let mut sets: Vec<Vec<usize>> = Vec::new();
        if band.sub_arcs.is_empty() {
            for (side, ep) in band.endpoints.iter().enumerate() {
                sets.push(index_candidates(ep, cut_at(ep.lambda), side == 0));
            }
        } else {
            for arc in &band.sub_arcs {
                for ep in arc.ends.iter().filter(|e| e.kind != EndpointKind::Resonance) {
                    let cut = cut_at(ep.lambda);
                    let both = cut.and_then(|k| k.eigen()).and_then(|(_, z)| z.label).filter(|l| l.sign == LabelSign::Both);
                    sets.push(match both {
                        Some(l) => vec![l.n, l.n + 1],
                        None => index_candidates(ep, cut, false).into_iter().chain(index_candidates(ep, cut, true)).collect(),
                    });
                }
            }
        }
        sets.retain(|v| !v.is_empty());
        let common: Vec<usize> = match sets.split_first() {
            Some((first, rest)) => first.iter().copied().filter(|x| rest.iter().all(|v| v.contains(x))).collect(),
            None => Vec::new(),
        };
        band.n = common.into_iter().find(|&n| n > 0).unwrap_or(next);
        next = band.n + 1;
    }
}

fn merge_intervals(it: impl Iterator<Item = [f64; 2]>) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::new();
    for iv in it {
        match out.last_mut() {
            Some(last) if last[1] >= iv[0] => last[1] = last[1].max(iv[1]),
            _ => out.push(iv),
        }
    }
    out
}

/// Multiplicity and opening side of a real resonance r with Δ(r) ∈ (−1, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonanceClass {
    pub m: u32,
    /// Side a: ρ′(r) > 0, the branches open to the right. Side b: to the left.
    /// `None` for double resonances.
    pub opens_right: Option<bool>,
    pub delta_at_r: f64,
}

pub fn classify_resonance(c: &CoefficientSet, r: &LocatedZero) -> Result<ResonanceClass> {
    if r.which != ZeroFunction::Rho || !r.is_real() {
        return Err(Error::Precondition("classification needs a real zero of ρ".into()));
    }
    let lam = r.lambda.re;
    let opts = IntegratorOptions::fast(1e-13);
    let (b, d) = bundle_with_derivative(c, &SpectralPoint::real(lam), &opts)?;
    let delta = b.t1;
    if delta.im.abs() > 1e-8 || !(delta.re > -1.0 && delta.re < 1.0) {
        return Err(Error::Precondition(format!("Δ(r) = {delta} is not in (−1, 1)")));
    }
    let solver = ZeroSolver::new(c);
    let radius = 1e-3 * lam.abs().max(1.0);
    let m = solver.count(
        ZeroFunction::Rho,
        &ContourSpec { shape: Shape::LambdaDisk { center: r.lambda, radius }, node_count: 64 },
    )?;
    match m {
        1 => Ok(ResonanceClass { m: 1, opens_right: Some(d.rho.re > 0.0), delta_at_r: delta.re }),
        2 => {
            let h = 1e-5 * lam.abs().max(1.0);
            let (_, dp) = bundle_with_derivative(c, &SpectralPoint::real(lam + h), &opts)?;
            let (_, dm) = bundle_with_derivative(c, &SpectralPoint::real(lam - h), &opts)?;
            let second = (dp.rho.re - dm.rho.re) / (2.0 * h);
            if second <= 0.0 {
                return Err(Error::Consistency(format!("ρ″(r) = {second} ≤ 0 at a double resonance")));
            }
            Ok(ResonanceClass { m: 2, opens_right: None, delta_at_r: delta.re })
        }
        m => Err(Error::Multiplicity { lambda: lam, m }),
    }
}

/// Pointwise re-check of a report: band interiors have indicator ≥ 2, gaps 0,
/// 𝔖₄ exactly where both branches are inside, σₙ ∩ σₙ₊₂ = ∅, and the
/// 𝔖₄ formula from band overlaps agrees with the indicator set.
pub fn validate_report(c: &CoefficientSet, report: &SpectrumReport, samples: usize) -> Result<Vec<String>> {
    let opts = IntegratorOptions::fast(report.provenance.tol_ode);
    let mut problems = Vec::new();
    let ind = |l: f64| -> Result<u8> {
        let b = bundle_with(c, &SpectralPoint::real(l), &opts)?;
        let inside = branches_inside(&b);
        Ok(2 * (inside[0] as u8 + inside[1] as u8))
    };
    let interior = |iv: [f64; 2]| (1..=samples).map(move |j| iv[0] + (iv[1] - iv[0]) * j as f64 / (samples + 1) as f64);
    for band in &report.bands {
        for l in interior(band.closure) {
            if ind(l)? < 2 {
                problems.push(format!("band {} has indicator 0 at {l}", band.n));
            }
        }
    }
    for gap in &report.gaps {
        for l in interior(*gap) {
            if ind(l)? != 0 {
                problems.push(format!("gap [{}, {}] has spectrum at {l}", gap[0], gap[1]));
            }
        }
    }
    for iv in &report.mult4 {
        for l in interior(*iv) {
            if ind(l)? != 4 {
                problems.push(format!("𝔖₄ interval [{}, {}] has multiplicity < 4 at {l}", iv[0], iv[1]));
            }
        }
    }
    for (i, a) in report.bands.iter().enumerate() {
        for b in &report.bands[i + 1..] {
            if b.n == a.n + 2 || a.n == b.n + 2 {
                let lo = a.closure[0].max(b.closure[0]);
                let hi = a.closure[1].min(b.closure[1]);
                if lo <= hi {
                    problems.push(format!("σ{} and σ{} overlap on [{lo}, {hi}]", a.n, b.n));
                }
            }
        }
    }
    let formula = mult4_from_bands(&report.bands);
    let same = formula.len() == report.mult4.len()
        && formula.iter().zip(&report.mult4).all(|(x, y)| {
            let tol = |v: f64| 1e-9 * v.abs().max(1.0);
            (x[0] - y[0]).abs() <= tol(x[0]) && (x[1] - y[1]).abs() <= tol(x[1])
        });
    if !same {
        problems.push(format!("𝔖₄ from band overlaps {formula:?} differs from indicator set {:?}", report.mult4));
    }
    Ok(problems)
}

/// ∪(σₙ′ ∩ σₙ₊₁′) ∪ ∪(σₙ⁻ ∩ σₙ⁺), as closed intervals.
pub fn mult4_from_bands(bands: &[Band]) -> Vec<[f64; 2]> {
    let mut pieces = Vec::new();
    for (i, a) in bands.iter().enumerate() {
        for b in &bands[i + 1..] {
            let lo = a.closure[0].max(b.closure[0]);
            let hi = a.closure[1].min(b.closure[1]);
            if lo < hi {
                pieces.push([lo, hi]);
            }
        }
        if a.sub_arcs.len() == 2 {
            let (x, y) = (&a.sub_arcs[0].interval, &a.sub_arcs[1].interval);
            let lo = x[0].max(y[0]);
            let hi = x[1].min(y[1]);
            if lo < hi {
                pieces.push([lo, hi]);
            }
        }
    }
    pieces.sort_by(|x, y| x[0].total_cmp(&y[0]));
    merge_intervals(pieces.into_iter())
}

/// Flat CSV of band and gap endpoints.
pub fn report_csv(report: &SpectrumReport) -> String {
    let mut out = String::from("kind,n,lo,hi,case,lo_kind,hi_kind\n");
    let kind = |k: EndpointKind| serde_json::to_value(k).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    for b in &report.bands {
        let tags: Vec<String> = b
            .case_tags
            .iter()
            .map(|t| serde_json::to_value(t).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
            .collect();
        out.push_str(&format!(
            "band,{},{:.16e},{:.16e},{},{},{}\n",
            b.n,
            b.closure[0],
            b.closure[1],
            tags.join("+"),
            kind(b.endpoints[0].kind),
            kind(b.endpoints[1].kind)
        ));
    }
    for g in &report.gaps {
        out.push_str(&format!("gap,,{:.16e},{:.16e},,,\n", g[0], g[1]));
    }
    for m in &report.mult4 {
        out.push_str(&format!("mult4,,{:.16e},{:.16e},,,\n", m[0], m[1]));
    }
    out
}
