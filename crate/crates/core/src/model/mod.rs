//! Frenkel-exciton model: site basis, Hamiltonian, exciton basis and static disorder.

mod controllability;

pub use controllability::{controllability_rank, Controllability};

use std::path::Path;

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, RMatrix};
use crate::units::sigma_from_fwhm;

const FMO_DATA: &str = include_str!("../../data/fmo_adolphs_renger.toml");

/// Electronic system: site energies, inter-site couplings and transition dipoles.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitonModel {
    site_energies: Vec<f64>,
    couplings: RMatrix,
    dipoles: Vec<Vector3<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    name: String,
    units: UnitsBlock,
    sites: SitesBlock,
    couplings: CouplingsBlock,
    dipoles: DipolesBlock,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitsBlock {
    energy: String,
    dipole: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SitesBlock {
    energies: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingsBlock {
    matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DipolesBlock {
    magnitude: f64,
    directions: Vec<[f64; 3]>,
}

impl ExcitonModel {
    /// Build a model after checking the structural invariants.
    pub fn new(
        site_energies: Vec<f64>,
        couplings: RMatrix,
        dipoles: Vec<Vector3<f64>>,
    ) -> Result<Self> {
        let n = site_energies.len();
        if n == 0 {
            return Err(Error::InvalidModel("no sites".into()));
        }
        if couplings.nrows() != n || couplings.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: couplings.nrows(),
            });
        }
        if dipoles.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: dipoles.len(),
            });
        }
        for i in 0..n {
            if couplings[(i, i)] != 0.0 {
                return Err(Error::InvalidModel(format!(
                    "nonzero diagonal coupling at site {}",
                    i + 1
                )));
            }
            for j in 0..i {
                if couplings[(i, j)] != couplings[(j, i)] {
                    return Err(Error::InvalidModel(format!(
                        "couplings not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let finite = site_energies.iter().all(|e| e.is_finite())
            && couplings.iter().all(|e| e.is_finite())
            && dipoles.iter().all(|d| d.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::InvalidModel("non-finite entry".into()));
        }
        Ok(Self {
            site_energies,
            couplings,
            dipoles,
        })
    }

    /// The bundled seven-site FMO model.
    pub fn fmo() -> Self {
        Self::from_toml_str(FMO_DATA).expect("bundled FMO data file is valid")
    }

    /// Raw text of the bundled FMO data file.
    pub fn fmo_data() -> &'static str {
        FMO_DATA
    }

    /// Load a model file from disk.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Parse a model from the structured text format.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ModelFile = toml::from_str(text)?;
        if file.format != "exciton-model" {
            return Err(Error::InvalidModel(format!(
                "unknown format `{}`",
                file.format
            )));
        }
        if file.version == 0 || file.name.is_empty() {
            return Err(Error::InvalidModel("missing version or name".into()));
        }
        if file.units.energy != "cm^-1" {
            return Err(Error::InvalidModel(format!(
                "unsupported energy unit `{}`",
                file.units.energy
            )));
        }
        if file.units.dipole != "debye" {
            return Err(Error::InvalidModel(format!(
                "unsupported dipole unit `{}`",
                file.units.dipole
            )));
        }
        let n = file.sites.energies.len();
        if file.couplings.matrix.len() != n || file.couplings.matrix.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel(
                "coupling matrix must be square with one row per site".into(),
            ));
        }
        let couplings = DMatrix::from_fn(n, n, |i, j| file.couplings.matrix[i][j]);
        let dipoles = file
            .dipoles
            .directions
            .iter()
            .map(|d| {
                let v = Vector3::new(d[0], d[1], d[2]);
                let norm = v.norm();
                if norm == 0.0 {
                    Err(Error::InvalidModel("zero dipole direction".into()))
                } else {
                    Ok(v * (file.dipoles.magnitude / norm))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(file.sites.energies, couplings, dipoles)
    }

    pub fn n_sites(&self) -> usize {
        self.site_energies.len()
    }

    pub fn site_energies(&self) -> &[f64] {
        &self.site_energies
    }

    pub fn couplings(&self) -> &RMatrix {
        &self.couplings
    }

    pub fn dipoles(&self) -> &[Vector3<f64>] {
        &self.dipoles
    }

    /// Copy of the model with replaced site energies.
    pub fn with_site_energies(&self, energies: Vec<f64>) -> Result<Self> {
        Self::new(energies, self.couplings.clone(), self.dipoles.clone())
    }

    /// Copy of the model with every dipole transformed by `rotation`.
    pub fn rotated(&self, rotation: &Matrix3<f64>) -> Self {
        Self {
            site_energies: self.site_energies.clone(),
            couplings: self.couplings.clone(),
            dipoles: self.dipoles.iter().map(|d| rotation * d).collect(),
        }
    }

    /// Single-excitation Hamiltonian block (no ground state), cm⁻¹.
    pub fn single_block(&self) -> RMatrix {
        let mut h = self.couplings.clone();
        for (i, e) in self.site_energies.iter().enumerate() {
            h[(i, i)] = *e;
        }
        h
    }

    /// Two-excitation Hamiltonian block over hard-core pair states, cm⁻¹.
    pub fn double_block(&self) -> RMatrix {
        let space = HilbertSpace::new(self.n_sites());
        let pairs = space.pairs();
        let m = pairs.len();
        let mut h = RMatrix::zeros(m, m);
        for (a, &(n1, m1)) in pairs.iter().enumerate() {
            h[(a, a)] = self.site_energies[n1] + self.site_energies[m1];
            for (b, &(n2, m2)) in pairs.iter().enumerate() {
                if a == b {
                    continue;
                }
                // Pair states sharing exactly one pigment couple through J between the other two.
                let shared = [n1, m1].iter().filter(|s| **s == n2 || **s == m2).count();
                if shared == 1 {
                    let p = if n1 == n2 || n1 == m2 { m1 } else { n1 };
                    let q = if n2 == n1 || n2 == m1 { m2 } else { n2 };
                    h[(a, b)] = self.couplings[(p, q)];
                }
            }
        }
        h
    }
}

/// Which excitation manifolds to include above the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manifold {
    Single,
    SingleDouble,
}

/// Layout of the truncated Hilbert space: index 0 is the ground state, then the
/// single-excitation states |n⟩, then the hard-core pair states |nm⟩ with n < m in
/// lexicographic order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    n_sites: usize,
}

impl HilbertSpace {
    pub fn new(n_sites: usize) -> Self {
        Self { n_sites }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_pairs(&self) -> usize {
        self.n_sites * (self.n_sites.saturating_sub(1)) / 2
    }

    pub fn dim(&self, manifold: Manifold) -> usize {
        match manifold {
            Manifold::Single => 1 + self.n_sites,
            Manifold::SingleDouble => 1 + self.n_sites + self.n_pairs(),
        }
    }

    /// Index of a single-excitation state (site index zero-based).
    pub fn single(&self, n: usize) -> usize {
        1 + n
    }

    /// Index of the pair state |nm⟩, n ≠ m (zero-based sites).
    pub fn pair(&self, n: usize, m: usize) -> usize {
        let (a, b) = if n < m { (n, m) } else { (m, n) };
        let before: usize = (0..a).map(|k| self.n_sites - 1 - k).sum();
        1 + self.n_sites + before + (b - a - 1)
    }

    /// Pair states in storage order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.n_pairs());
        for n in 0..self.n_sites {
            for m in n + 1..self.n_sites {
                out.push((n, m));
            }
        }
        out
    }
}

/// Full Hamiltonian including the ground state (energy 0), cm⁻¹.
pub fn build_hamiltonian(model: &ExcitonModel, manifold: Manifold) -> RMatrix {
    let space = HilbertSpace::new(model.n_sites());
    let dim = space.dim(manifold);
    let n = model.n_sites();
    let mut h = RMatrix::zeros(dim, dim);
    h.view_mut((1, 1), (n, n)).copy_from(&model.single_block());
    if manifold == Manifold::SingleDouble {
        let p = space.n_pairs();
        h.view_mut((1 + n, 1 + n), (p, p))
            .copy_from(&model.double_block());
    }
    h
}

/// Eigen-decomposition of a real symmetric block with ascending energies.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitonBasis {
    /// Eigenvalues, ascending.
    pub energies: Vec<f64>,
    /// Eigenvectors as columns, expressed in the input basis.
    pub vectors: RMatrix,
}

impl ExcitonBasis {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Amplitude ⟨site|exciton⟩.
    pub fn amplitude(&self, site: usize, exciton: usize) -> f64 {
        self.vectors[(site, exciton)]
    }
}

/// Diagonalize a real symmetric Hamiltonian block.
///
/// Eigenvalues are ascending; exact ties are ordered by decreasing |amplitude| on
/// the third basis state, then by the lowest basis index with nonzero amplitude.
/// Each eigenvector is signed so that its largest component is positive.
pub fn exciton_basis(h: &RMatrix) -> ExcitonBasis {
    if h.nrows() == 0 {
        return ExcitonBasis {
            energies: Vec::new(),
            vectors: RMatrix::zeros(0, 0),
        };
    }
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let n = h.nrows();
    let columns: Vec<Vec<Complex64>> = (0..n)
        .map(|k| {
            eig.eigenvectors
                .column(k)
                .iter()
                .map(|x| Complex64::new(*x, 0.0))
                .collect()
        })
        .collect();
    let order = sorted_order(eig.eigenvalues.as_slice(), &columns);
    let mut vectors = RMatrix::zeros(n, n);
    let mut energies = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        energies.push(eig.eigenvalues[src]);
        let mut col = eig.eigenvectors.column(src).clone_owned();
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col = -col;
        }
        vectors.set_column(dst, &col);
    }
    ExcitonBasis { energies, vectors }
}

/// Eigen-decomposition of a complex Hermitian matrix with the same ordering and
/// phase conventions as [`exciton_basis`] (largest component real and positive).
pub fn hermitian_basis(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let n = h.nrows();
    let columns: Vec<Vec<Complex64>> = (0..n)
        .map(|k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect();
    let order = sorted_order(eig.eigenvalues.as_slice(), &columns);
    let mut vectors = CMatrix::zeros(n, n);
    let mut energies = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        energies.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        let (imax, _) = col.iter().enumerate().fold((0, -1.0), |acc, (i, z)| {
            if z.norm() > acc.1 {
                (i, z.norm())
            } else {
                acc
            }
        });
        let phase = col[imax].conj() / col[imax].norm();
        vectors.set_column(dst, &(col * phase));
    }
    (energies, vectors)
}

fn sorted_order(energies: &[f64], columns: &[Vec<Complex64>]) -> Vec<usize> {
    let n = energies.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(a.cmp(&b)));
    let key = |k: usize| {
        let col = &columns[k];
        let site3 = col.get(2).map_or(0.0, |z| z.norm());
        let first = col.iter().position(|z| z.norm() > 1e-12).unwrap_or(n);
        (site3, first)
    };
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && energies[order[end]] == energies[order[start]] {
            end += 1;
        }
        order[start..end].sort_by(|&a, &b| {
            let (sa, fa) = key(a);
            let (sb, fb) = key(b);
            sb.total_cmp(&sa).then(fa.cmp(&fb))
        });
        start = end;
    }
    order
}

/// Gaussian static disorder of the site energies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisorderSpec {
    /// Full width at half maximum, cm⁻¹.
    pub fwhm: f64,
    pub rng_seed: u64,
}

impl DisorderSpec {
    pub fn new(fwhm: f64, rng_seed: u64) -> Result<Self> {
        if !(fwhm >= 0.0 && fwhm.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "fwhm",
                reason: format!("must be >= 0, got {fwhm}"),
            });
        }
        Ok(Self { fwhm, rng_seed })
    }
}

/// Draw `count` disordered copies of `model`; only site energies change.
pub fn sample_disorder(
    model: &ExcitonModel,
    spec: &DisorderSpec,
    count: usize,
) -> Result<Vec<ExcitonModel>> {
    if count == 0 {
        return Err(Error::InvalidParameter {
            name: "count",
            reason: "must be >= 1".into(),
        });
    }
    if spec.fwhm == 0.0 {
        return Ok(vec![model.clone(); count]);
    }
    let normal =
        Normal::new(0.0, sigma_from_fwhm(spec.fwhm)).map_err(|e| Error::InvalidParameter {
            name: "fwhm",
            reason: e.to_string(),
        })?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    (0..count)
        .map(|_| {
            let energies = model
                .site_energies
                .iter()
                .map(|e| e + normal.sample(&mut rng))
                .collect();
            model.with_site_energies(energies)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dimer(e: f64, j: f64) -> ExcitonModel {
        ExcitonModel::new(
            vec![e, e],
            RMatrix::from_row_slice(2, 2, &[0.0, j, j, 0.0]),
            vec![Vector3::x(), Vector3::x()],
        )
        .unwrap()
    }

    #[test]
    fn diagonal_case_is_exact() {
        let energies = vec![7.0, 1.0, 4.0, 2.0, 6.0, 3.0, 5.0];
        let m = ExcitonModel::new(energies, RMatrix::zeros(7, 7), vec![Vector3::z(); 7]).unwrap();
        let b = exciton_basis(&m.single_block());
        assert_eq!(b.energies, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        for k in 0..7 {
            assert_eq!(
                b.vectors
                    .column(k)
                    .iter()
                    .filter(|x| x.abs() == 1.0)
                    .count(),
                1
            );
        }
    }

    #[test]
    fn symmetric_dimer_eigenpairs() {
        let b = exciton_basis(&dimer(100.0, -10.0).single_block());
        assert!((b.energies[0] - 90.0).abs() < 1e-12);
        assert!((b.energies[1] - 110.0).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b.vectors[(0, 0)] - s).abs() < 1e-12 && (b.vectors[(1, 0)] - s).abs() < 1e-12);
        assert!((b.vectors[(0, 1)].abs() - s).abs() < 1e-12);
        assert!((b.vectors[(0, 1)] + b.vectors[(1, 1)]).abs() < 1e-12);
    }

    #[test]
    fn fmo_lowest_exciton_on_site_three() {
        let b = exciton_basis(&ExcitonModel::fmo().single_block());
        let col = b.vectors.column(0);
        assert_eq!(col.iamax(), 2);
    }

    #[test]
    fn hamiltonian_layout() {
        let m = ExcitonModel::fmo();
        let h = build_hamiltonian(&m, Manifold::SingleDouble);
        assert_eq!(h.nrows(), 29);
        let space = HilbertSpace::new(7);
        assert_eq!(space.pair(0, 1), 8);
        assert_eq!(space.pair(5, 6), 28);
        assert_eq!(h[(space.single(2), space.single(2))], 12210.0);
        assert_eq!(h[(space.pair(0, 2), space.pair(0, 2))], 12410.0 + 12210.0);
        // |13> couples to |14> through J_34 and to |23> through J_12.
        assert_eq!(
            h[(space.pair(0, 2), space.pair(0, 3))],
            m.couplings()[(2, 3)]
        );
        assert_eq!(
            h[(space.pair(0, 2), space.pair(1, 2))],
            m.couplings()[(0, 1)]
        );
        // |12> and |34> share no pigment.
        assert_eq!(h[(space.pair(0, 1), space.pair(2, 3))], 0.0);
        assert!((&h - h.transpose()).norm() == 0.0);
        assert_eq!(h.row(0).iter().filter(|x| **x != 0.0).count(), 0);
    }

    #[test]
    fn rejects_asymmetric_couplings() {
        let j = RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(ExcitonModel::new(vec![0.0, 0.0], j, vec![Vector3::x(); 2]).is_err());
    }

    #[test]
    fn degenerate_ties_prefer_site_three() {
        let m =
            ExcitonModel::new(vec![5.0; 4], RMatrix::zeros(4, 4), vec![Vector3::x(); 4]).unwrap();
        let b = exciton_basis(&m.single_block());
        assert_eq!(b.vectors.column(0).iamax(), 2);
        assert_eq!(b.vectors.column(1).iamax(), 0);
        assert_eq!(b.vectors.column(2).iamax(), 1);
        assert_eq!(b.vectors.column(3).iamax(), 3);
    }

    #[test]
    fn zero_disorder_returns_copies() {
        let m = ExcitonModel::fmo();
        let s = sample_disorder(&m, &DisorderSpec::new(0.0, 1).unwrap(), 3).unwrap();
        assert!(s.iter().all(|x| *x == m));
        assert!(sample_disorder(&m, &DisorderSpec::new(1.0, 1).unwrap(), 0).is_err());
        assert!(DisorderSpec::new(-1.0, 1).is_err());
    }
}

/// Exciton bases of each manifold of a model. States are indexed as in
/// [`HilbertSpace`], with exciton states replacing site states within each block.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    pub manifold: Manifold,
    pub single: ExcitonBasis,
    pub double: Option<ExcitonBasis>,
}

impl Eigensystem {
    pub fn new(model: &ExcitonModel, manifold: Manifold) -> Self {
        let single = exciton_basis(&model.single_block());
        let double = match manifold {
            Manifold::Single => None,
            Manifold::SingleDouble => Some(exciton_basis(&model.double_block())),
        };
        Self {
            manifold,
            single,
            double,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.single.dim()
    }

    pub fn dim(&self) -> usize {
        1 + self.single.dim() + self.double.as_ref().map_or(0, |d| d.dim())
    }

    /// Energies of all states in eigenbasis order (ground first, 0 cm⁻¹).
    pub fn energies(&self) -> Vec<f64> {
        let mut e = vec![0.0];
        e.extend_from_slice(&self.single.energies);
        if let Some(d) = &self.double {
            e.extend_from_slice(&d.energies);
        }
        e
    }

    /// Block-diagonal change of basis U with columns = eigenstates in the site basis,
    /// so that ρ_site = U ρ_eig Uᵀ.
    pub fn transform(&self) -> RMatrix {
        let dim = self.dim();
        let n = self.n_sites();
        let mut u = RMatrix::zeros(dim, dim);
        u[(0, 0)] = 1.0;
        u.view_mut((1, 1), (n, n)).copy_from(&self.single.vectors);
        if let Some(d) = &self.double {
            let p = d.dim();
            u.view_mut((1 + n, 1 + n), (p, p)).copy_from(&d.vectors);
        }
        u
    }
}
