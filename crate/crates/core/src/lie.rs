//! Dynamical Lie algebra and observability-space closure.
//!
//! Algebra elements are stored as Hermitian representatives `B` with `iB` in
//! the (skew-Hermitian) algebra, so the bracket acts as `(A, B) ↦ i[A, B]`
//! and every coefficient is real.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{c, hermitian_bracket_unchecked, hs_inner_unchecked, OperatorMatrix, DEFAULT_TOL};
use crate::scalar::Real;

/// Default relative tolerance for the incremental independence test.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Ordered basis of a real subspace of traceless Hermitian operators.
#[derive(Clone, Debug)]
pub struct OperatorBasis<T: Real> {
    dim: usize,
    elements: Vec<OperatorMatrix<T>>,
    depths: Vec<usize>,
    orthonormal: bool,
}

impl<T: Real> OperatorBasis<T> {
    /// Validates and wraps a list of traceless Hermitian, linearly independent operators.
    ///
    /// The orthonormal flag is set when the Gram matrix is the identity to 1e-10.
    pub fn new(dim: usize, elements: Vec<OperatorMatrix<T>>, depths: Vec<usize>) -> Result<Self> {
        if depths.len() != elements.len() {
            return Err(Error::LengthMismatch {
                what: "depths",
                expected: elements.len(),
                found: depths.len(),
            });
        }
        if !elements.is_empty() && elements.len() > dim * dim - 1 {
            return Err(Error::RankDeficient { index: dim * dim - 1 });
        }
        let tol = T::lit(DEFAULT_TOL);
        let mut span = RowSpace::new(T::lit(DEFAULT_RANK_TOL));
        for (index, e) in elements.iter().enumerate() {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.dim(),
                });
            }
            e.ensure_hermitian(tol)?;
            if !e.is_traceless(tol) {
                return Err(Error::InvalidParameter(format!(
                    "basis element {index} is not traceless"
                )));
            }
            if e.norm() == T::zero() || !span.insert(&e.to_real_vec()) {
                return Err(Error::RankDeficient { index });
            }
        }
        let mut basis = Self {
            dim,
            elements,
            depths,
            orthonormal: false,
        };
        basis.orthonormal = basis.gram_deviation() <= tol;
        Ok(basis)
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            elements: Vec::new(),
            depths: Vec::new(),
            orthonormal: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[OperatorMatrix<T>] {
        &self.elements
    }

    pub fn depths(&self) -> &[usize] {
        &self.depths
    }

    pub fn max_depth(&self) -> usize {
        self.depths.iter().copied().max().unwrap_or(0)
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    /// Real Gram matrix `⟨Bᵢ, Bⱼ⟩`.
    pub fn gram(&self) -> DMatrix<T> {
        let r = self.len();
        DMatrix::from_fn(r, r, |i, j| hs_inner_unchecked(&self.elements[i], &self.elements[j]).re)
    }

    /// Largest entry of `G − I`.
    pub fn gram_deviation(&self) -> T {
        let g = self.gram();
        let mut dev = T::zero();
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { T::one() } else { T::zero() };
                dev = dev.max((g[(i, j)] - target).abs());
            }
        }
        dev
    }

    pub(crate) fn ensure_orthonormal(&self) -> Result<()> {
        if self.orthonormal {
            Ok(())
        } else {
            Err(Error::NotOrthonormal)
        }
    }

    pub(crate) fn ensure_dim(&self, n: usize) -> Result<()> {
        if self.dim != n {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: n,
            });
        }
        Ok(())
    }
}

/// Which elements Step k brackets against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketScope {
    /// Brackets against the generating set only.
    Generators,
    /// Brackets against every element of a supplied Lie basis.
    LieBasis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosureReport {
    pub dimension: usize,
    pub max_depth: usize,
    pub generator_count: usize,
    pub rank_tol_used: f64,
    pub bracket_scope: BracketScope,
}

/// Incrementally maintained orthonormal row space over real coordinates.
///
/// A candidate is accepted when its residual after projection exceeds
/// `rank_tol · ‖candidate‖`.
#[derive(Clone, Debug)]
pub struct RowSpace<T: Real> {
    rows: Vec<Vec<T>>,
    rank_tol: T,
}

impl<T: Real> RowSpace<T> {
    pub fn new(rank_tol: T) -> Self {
        Self {
            rows: Vec::new(),
            rank_tol,
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn residual(&self, v: &[T]) -> Vec<T> {
        let mut r = v.to_vec();
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for q in &self.rows {
                let d = dot(q, &r);
                r.iter_mut().zip(q).for_each(|(x, qi)| *x -= d * *qi);
            }
        }
        r
    }

    /// Relative residual norm of `v` against the current span.
    pub fn relative_residual(&self, v: &[T]) -> T {
        let nv = dot(v, v).sqrt();
        if nv == T::zero() {
            return T::zero();
        }
        let r = self.residual(v);
        dot(&r, &r).sqrt() / nv
    }

    /// Inserts `v` if independent of the current span; returns whether it was accepted.
    pub fn insert(&mut self, v: &[T]) -> bool {
        let nv = dot(v, v).sqrt();
        if nv == T::zero() {
            return false;
        }
        let r = self.residual(v);
        let nr = dot(&r, &r).sqrt();
        if nr > self.rank_tol * nv {
            self.rows.push(r.into_iter().map(|x| x / nr).collect());
            true
        } else {
            false
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

/// `S − (Tr S / n) I`.
pub fn traceless_part<T: Real>(s: &OperatorMatrix<T>) -> OperatorMatrix<T> {
    let n = s.dim();
    let shift = s.trace() * c(T::one() / T::lit(n as f64), T::zero());
    let mut out = s.matrix().clone();
    for i in 0..n {
        out[(i, i)] -= shift;
    }
    OperatorMatrix::from_square(out)
}

struct Accumulator<T: Real> {
    span: RowSpace<T>,
    elements: Vec<OperatorMatrix<T>>,
    depths: Vec<usize>,
    rank_tol: T,
}

impl<T: Real> Accumulator<T> {
    fn new(rank_tol: T) -> Self {
        Self {
            span: RowSpace::new(rank_tol),
            elements: Vec::new(),
            depths: Vec::new(),
            rank_tol,
        }
    }

    /// `scale` bounds the candidate's norm from the operands; anything below
    /// `rank_tol · scale` is treated as an exact zero.
    fn offer(&mut self, candidate: OperatorMatrix<T>, depth: usize, scale: T) -> bool {
        let norm = candidate.norm();
        if norm <= self.rank_tol * scale || !self.span.insert(&candidate.to_real_vec()) {
            return false;
        }
        self.elements.push(candidate.scale(T::one() / norm));
        self.depths.push(depth);
        true
    }

    /// Runs bracket rounds until a round adds nothing. Each round brackets the
    /// previous round's new elements (in index order) with every partner.
    fn saturate(&mut self, partners: &[OperatorMatrix<T>]) {
        let partner_norms: Vec<T> = partners.iter().map(|p| p.norm()).collect();
        let mut frontier = 0..self.elements.len();
        let mut depth = 0;
        while !frontier.is_empty() {
            depth += 1;
            let start = self.elements.len();
            for i in frontier {
                for (p, pn) in partners.iter().zip(&partner_norms) {
                    let cand = hermitian_bracket_unchecked(&self.elements[i], p);
                    self.offer(cand, depth, *pn);
                }
            }
            frontier = start..self.elements.len();
        }
    }

    fn finish(self, dim: usize) -> OperatorBasis<T> {
        OperatorBasis {
            dim,
            elements: self.elements,
            depths: self.depths,
            orthonormal: false,
        }
    }
}

fn check_generators<T: Real>(generators: &[OperatorMatrix<T>]) -> Result<usize> {
    let first = generators.first().ok_or(Error::EmptyGenerators)?;
    let n = first.dim();
    for g in generators {
        first.check_dim(g)?;
        g.ensure_hermitian(T::lit(DEFAULT_TOL))?;
    }
    Ok(n)
}

/// Closes `{i·gᵢ}` into the smallest real Lie algebra containing it.
///
/// Generators are reduced to their traceless parts (identity components are
/// central and only change a global phase). Elements are rescaled to unit norm
/// on acceptance; depth records the round of acceptance.
pub fn close_algebra<T: Real>(
    generators: &[OperatorMatrix<T>],
    rank_tol: T,
) -> Result<(OperatorBasis<T>, ClosureReport)> {
    let n = check_generators(generators)?;
    let reduced: Vec<_> = generators.iter().map(traceless_part).collect();
    let mut acc = Accumulator::new(rank_tol);
    for (g, orig) in reduced.iter().zip(generators) {
        acc.offer(g.clone(), 0, orig.norm());
    }
    acc.saturate(&reduced);
    let basis = acc.finish(n);
    let report = ClosureReport {
        dimension: basis.len(),
        max_depth: basis.max_depth(),
        generator_count: generators.len(),
        rank_tol_used: rank_tol.as_f64(),
        bracket_scope: BracketScope::Generators,
    };
    Ok((basis, report))
}

/// Observability space `⊕ⱼ ad_𝓛ʲ span{iS′}`, closed under brackets with every
/// element of `lie_basis`.
pub fn observability_space<T: Real>(
    lie_basis: &OperatorBasis<T>,
    s: &OperatorMatrix<T>,
    rank_tol: T,
) -> Result<(OperatorBasis<T>, ClosureReport)> {
    lie_basis.ensure_dim(s.dim())?;
    s.ensure_hermitian(T::lit(DEFAULT_TOL))?;
    let mut acc = Accumulator::new(rank_tol);
    acc.offer(traceless_part(s), 0, s.norm());
    acc.saturate(lie_basis.elements());
    let basis = acc.finish(s.dim());
    let report = ClosureReport {
        dimension: basis.len(),
        max_depth: basis.max_depth(),
        generator_count: lie_basis.len(),
        rank_tol_used: rank_tol.as_f64(),
        bracket_scope: BracketScope::LieBasis,
    };
    Ok((basis, report))
}

/// Orthonormalises a basis under the Hilbert–Schmidt product, preserving
/// order, span and depth labels.
pub fn gram_schmidt<T: Real>(basis: &OperatorBasis<T>) -> Result<OperatorBasis<T>> {
    let tol = T::lit(DEFAULT_RANK_TOL);
    let mut out: Vec<OperatorMatrix<T>> = Vec::with_capacity(basis.len());
    for (index, e) in basis.elements.iter().enumerate() {
        let original = e.norm();
        let mut r = e.clone();
        for _ in 0..2 {
            for q in &out {
                let coeff = hs_inner_unchecked(q, &r).re;
                r = r.add_scaled(-coeff, q);
            }
        }
        // representatives stay exactly Hermitian
        let r = r.hermitian_part();
        let nr = r.norm();
        if nr <= tol * original {
            return Err(Error::RankDeficient { index });
        }
        out.push(r.scale(T::one() / nr));
    }
    Ok(OperatorBasis {
        dim: basis.dim,
        elements: out,
        depths: basis.depths.clone(),
        orthonormal: true,
    })
}

/// Decomposition of an operator against an orthonormal basis.
#[derive(Clone, Debug)]
pub struct Projection<T: Real> {
    pub coeffs: Vec<T>,
    pub in_span: OperatorMatrix<T>,
    pub residual: OperatorMatrix<T>,
}

/// Orthogonal projection onto `span(basis)`; `coeffsᵢ = Re⟨Bᵢ, a⟩`.
pub fn project_onto<T: Real>(basis: &OperatorBasis<T>, a: &OperatorMatrix<T>) -> Result<Projection<T>> {
    basis.ensure_orthonormal()?;
    basis.ensure_dim(a.dim())?;
    Ok(project_unchecked(basis, a))
}

pub(crate) fn project_unchecked<T: Real>(basis: &OperatorBasis<T>, a: &OperatorMatrix<T>) -> Projection<T> {
    let coeffs: Vec<T> = basis.elements.iter().map(|b| hs_inner_unchecked(b, a).re).collect();
    let in_span = combine(basis, &coeffs);
    let residual = a - &in_span;
    Projection {
        coeffs,
        in_span,
        residual,
    }
}

/// `Σᵢ coeffsᵢ Bᵢ`.
pub fn combine<T: Real>(basis: &OperatorBasis<T>, coeffs: &[T]) -> OperatorMatrix<T> {
    let mut acc = OperatorMatrix::zeros(basis.dim);
    for (b, &k) in basis.elements.iter().zip(coeffs) {
        acc = acc.add_scaled(k, b);
    }
    acc
}

/// True iff `i[x, y] ∈ span(sub)` for every `x ∈ full`, `y ∈ sub`.
pub fn is_ideal<T: Real>(sub: &OperatorBasis<T>, full: &OperatorBasis<T>, rank_tol: T) -> bool {
    if sub.dim != full.dim {
        return false;
    }
    let ortho = match gram_schmidt(sub) {
        Ok(o) => o,
        Err(_) => return false,
    };
    full.elements.iter().all(|x| {
        let xn = x.norm();
        ortho.elements.iter().all(|y| {
            let cand = hermitian_bracket_unchecked(x, y);
            project_unchecked(&ortho, &cand).residual.norm() <= rank_tol * xn
        })
    })
}

/// True iff every element of `sub` lies in `span(full)` (relative residual below `tol`).
pub fn is_subspace<T: Real>(sub: &OperatorBasis<T>, full: &OperatorBasis<T>, tol: T) -> bool {
    let ortho = match gram_schmidt(full) {
        Ok(o) => o,
        Err(_) => return false,
    };
    sub.elements
        .iter()
        .all(|e| project_unchecked(&ortho, e).residual.norm() <= tol * e.norm())
}

/// Largest residual of either orthonormalised basis against the other span;
/// zero iff the spans coincide (1 when the dimensions differ).
pub fn span_distance<T: Real>(a: &OperatorBasis<T>, b: &OperatorBasis<T>) -> Result<T> {
    let (qa, qb) = (gram_schmidt(a)?, gram_schmidt(b)?);
    if qa.len() != qb.len() {
        return Ok(T::one());
    }
    let d1 = qa
        .elements
        .iter()
        .map(|e| project_unchecked(&qb, e).residual.norm())
        .fold(T::zero(), |m, x| m.max(x));
    let d2 = qb
        .elements
        .iter()
        .map(|e| project_unchecked(&qa, e).residual.norm())
        .fold(T::zero(), |m, x| m.max(x));
    Ok(d1.max(d2))
}
