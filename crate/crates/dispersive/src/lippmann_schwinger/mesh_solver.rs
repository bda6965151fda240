use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::born::born_diagonal;
use super::kernel::OperatorKernel;
use super::mesh::QuadratureMesh;
use super::potential::PotentialSpec;
use super::ResolventHandle;
use crate::error::{Error, Result};
use crate::free_resolvent::{free_kernel_radial, ComplexFrequency};
use crate::{dist3, Point};

/// Smallest admissible singular value of the discretized `1 + R₀V`.
pub const NEAR_RESONANCE_THRESHOLD: f64 = 1e-8;

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Nyström solution of `R = R₀ − R₀VR` on a [`QuadratureMesh`].
#[derive(Debug)]
pub struct MeshResolvent {
    mesh: Arc<QuadratureMesh>,
    potential: PotentialSpec,
    freq: ComplexFrequency,
    /// `w_j V(x_j)`.
    d: Vec<f64>,
    system: nalgebra::linalg::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    /// On-mesh `∂^k R`, filled lazily.
    derivatives: Mutex<Vec<DMatrix<Complex64>>>,
    min_singular: f64,
}

/// Discretized free kernel `∂^k R₀` on the mesh, diagonal included.
pub fn free_mesh_matrix(mesh: &QuadratureMesh, freq: &ComplexFrequency, k: u32) -> DMatrix<Complex64> {
    let n = mesh.len();
    let kappa = freq.kappa();
    DMatrix::from_fn(n, n, |i, j| {
        if i != j {
            free_kernel_radial(dist3(&mesh.nodes[i], &mesh.nodes[j]), freq, k)
        } else {
            match k {
                0 => (kappa + mesh.diag_correction[i] / mesh.weights[i]) / (4.0 * PI),
                1 => Complex64::new(0.0, freq.sign.factor() / (4.0 * PI)),
                _ => C0,
            }
        }
    })
}

/// `∂^k R₀(x, x_j)` for off-mesh points `x`.
pub fn free_cross_matrix(points: &[Point], mesh: &QuadratureMesh, freq: &ComplexFrequency, k: u32) -> Result<DMatrix<Complex64>> {
    let mut m = DMatrix::zeros(points.len(), mesh.len());
    for (i, x) in points.iter().enumerate() {
        for (j, y) in mesh.nodes.iter().enumerate() {
            let r = dist3(x, y);
            if r < 1e-12 && k == 0 {
                return Err(Error::domain("grid", "evaluation point coincides with a mesh node"));
            }
            m[(i, j)] = free_kernel_radial(r, freq, k);
        }
    }
    Ok(m)
}

fn scale_rows(mut m: DMatrix<Complex64>, d: &[f64]) -> DMatrix<Complex64> {
    for (i, &v) in d.iter().enumerate() {
        m.row_mut(i).scale_mut(v);
    }
    m
}

fn scale_cols(mut m: DMatrix<Complex64>, d: &[f64]) -> DMatrix<Complex64> {
    for (j, &v) in d.iter().enumerate() {
        m.column_mut(j).scale_mut(v);
    }
    m
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Smallest singular value of `b` from inverse iteration on `b^* b`.
fn smallest_singular_value(b: &DMatrix<Complex64>) -> Result<f64> {
    let n = b.nrows();
    let lu = b.clone().lu();
    let lu_adj = b.adjoint().lu();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut x = DVector::from_fn(n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    x /= Complex64::from(x.norm());
    let mut est = 0.0;
    for _ in 0..60 {
        let y = lu.solve(&x).ok_or_else(|| Error::NearResonance(0.0))?;
        let z = lu_adj.solve(&y).ok_or_else(|| Error::NearResonance(0.0))?;
        let nz = z.norm();
        if !nz.is_finite() || nz == 0.0 {
            return Err(Error::NearResonance(0.0));
        }
        let new = nz.sqrt();
        x = z / Complex64::from(nz);
        if (new - est).abs() <= 1e-9 * new {
            est = new;
            break;
        }
        est = new;
    }
    Ok(1.0 / est)
}

impl MeshResolvent {
    pub fn mesh(&self) -> &QuadratureMesh {
        &self.mesh
    }

    /// Smallest singular value of `1 + R₀V` in the weighted L² scaling.
    pub fn min_singular_value(&self) -> f64 {
        self.min_singular
    }

    /// On-mesh `∂^k R` (derivative recursion through `R' = (1 − RV) R₀' (1 − VR)`).
    pub fn mesh_derivative(&self, k: u32) -> DMatrix<Complex64> {
        let mut cache = self.derivatives.lock().expect("derivative cache poisoned");
        while cache.len() <= k as usize {
            let n = cache.len() as u32;
            // R^{(n)} = Σ_{a+b+c=n−1} (n−1)!/(a!b!c!) P^{(a)} K^{(b+1)} Q^{(c)}
            // with P = 1 − RD, Q = 1 − DR and their derivatives −R^{(a)}D, −DR^{(c)}
            let m = n - 1;
            let dim = self.mesh.len();
            let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
            let p_of = |a: u32, cache: &Vec<DMatrix<Complex64>>| -> DMatrix<Complex64> {
                let rd = scale_cols(cache[a as usize].clone(), &self.d);
                if a == 0 {
                    DMatrix::identity(dim, dim) - rd
                } else {
                    -rd
                }
            };
            let q_of = |c: u32, cache: &Vec<DMatrix<Complex64>>| -> DMatrix<Complex64> {
                let dr = scale_rows(cache[c as usize].clone(), &self.d);
                if c == 0 {
                    DMatrix::identity(dim, dim) - dr
                } else {
                    -dr
                }
            };
            for a in 0..=m {
                for b in 0..=(m - a) {
                    let c = m - a - b;
                    let coef = factorial(m) / (factorial(a) * factorial(b) * factorial(c));
                    let kb = free_mesh_matrix(&self.mesh, &self.freq, b + 1);
                    let term = p_of(a, &cache) * kb * q_of(c, &cache);
                    acc += term * Complex64::from(coef);
                }
            }
            cache.push(acc);
        }
        cache[k as usize].clone()
    }

    /// On-mesh kernel of `∂^k R` with mesh weights.
    pub fn on_mesh_kernel(&self, k: u32) -> Result<OperatorKernel> {
        OperatorKernel::square(self.mesh.nodes.clone(), self.mesh_derivative(k), self.mesh.weights.clone())
    }

    /// `R(x, y)` between arbitrary points off the mesh.
    pub fn evaluate(&self, x: &Point, y: &Point) -> Result<Complex64> {
        let r = dist3(x, y);
        if r == 0.0 {
            return Err(Error::Singularity);
        }
        let s = self.scattered_kernel(&[*x], &[*y], 0)?;
        Ok(free_kernel_radial(r, &self.freq, 0) + s[(0, 0)])
    }
}

pub fn solve_resolvent(mesh: &QuadratureMesh, potential: &PotentialSpec, freq: &ComplexFrequency) -> Result<MeshResolvent> {
    solve_resolvent_shared(Arc::new(mesh.clone()), potential, freq)
}

pub fn solve_resolvent_shared(mesh: Arc<QuadratureMesh>, potential: &PotentialSpec, freq: &ComplexFrequency) -> Result<MeshResolvent> {
    if freq.epsilon == 0.0 && freq.lambda == 0.0 {
        return Err(Error::domain("freq", "needs epsilon > 0 or lambda > 0"));
    }
    let n = mesh.len();
    let v: Vec<f64> = mesh.nodes.iter().map(|x| potential.value(x)).collect();
    let d: Vec<f64> = v.iter().zip(&mesh.weights).map(|(v, w)| v * w).collect();
    let k0 = free_mesh_matrix(&mesh, freq, 0);
    let system_matrix = DMatrix::identity(n, n) + scale_cols(k0.clone(), &d);
    // weighted scaling: 1 + (√W K √W) diag(V)
    let sw: Vec<f64> = mesh.weights.iter().map(|w| w.sqrt()).collect();
    let scaled = DMatrix::identity(n, n) + scale_cols(scale_rows(scale_cols(k0.clone(), &sw), &sw), &v);
    let min_singular = if potential.is_zero() { 1.0 } else { smallest_singular_value(&scaled)? };
    if min_singular < NEAR_RESONANCE_THRESHOLD {
        return Err(Error::NearResonance(min_singular));
    }
    let system = system_matrix.lu();
    let r0 = system.solve(&k0).ok_or(Error::NearResonance(0.0))?;
    Ok(MeshResolvent {
        mesh,
        potential: *potential,
        freq: *freq,
        d,
        system,
        derivatives: Mutex::new(vec![r0]),
        min_singular,
    })
}

/// Kernel of `∂^k R` on the mesh.
pub fn resolvent_derivative(handle: &MeshResolvent, k: u32) -> Result<OperatorKernel> {
    if k < 1 {
        return Err(Error::domain("k", "derivative order must be at least 1"));
    }
    let limit = handle.potential.k0 + 2;
    if k > limit.max(2) {
        return Err(Error::domain("k", format!("derivative order above k0 + 2 = {limit}")));
    }
    handle.on_mesh_kernel(k)
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

impl ResolventHandle for MeshResolvent {
    fn frequency(&self) -> ComplexFrequency {
        self.freq
    }

    fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    /// Direct route: `−R₀(X,·) D (1 + K D)^{−1} R₀(·,Y)` for `k = 0`, the
    /// product-rule expansion otherwise.
    fn scattered_kernel(&self, rows: &[Point], cols: &[Point], k: u32) -> Result<DMatrix<Complex64>> {
        if self.potential.is_zero() {
            return Ok(DMatrix::zeros(rows.len(), cols.len()));
        }
        if k == 0 {
            let rx = free_cross_matrix(rows, &self.mesh, &self.freq, 0)?;
            let ry = free_cross_matrix(cols, &self.mesh, &self.freq, 0)?.transpose();
            let u = self.system.solve(&ry).ok_or(Error::NearResonance(0.0))?;
            let mut out = -(scale_cols(rx, &self.d) * u);
            self.correct_coincident(rows, cols, 0, &mut out)?;
            return Ok(out);
        }
        self.scattered_expansion(rows, cols, k)
    }

    fn scattered_kernel_born(&self, rows: &[Point], cols: &[Point], k: u32) -> Result<DMatrix<Complex64>> {
        if self.potential.is_zero() {
            return Ok(DMatrix::zeros(rows.len(), cols.len()));
        }
        self.scattered_expansion(rows, cols, k)
    }
}

impl MeshResolvent {
    /// Swaps the node-quadrature first Born term at coincident points for an
    /// accurately integrated one.
    fn correct_coincident(&self, rows: &[Point], cols: &[Point], k: u32, out: &mut DMatrix<Complex64>) -> Result<()> {
        for (i, x) in rows.iter().enumerate() {
            for (j, y) in cols.iter().enumerate() {
                if x != y {
                    continue;
                }
                let pt = std::slice::from_ref(x);
                let rx: Vec<DMatrix<Complex64>> =
                    (0..=k).map(|a| free_cross_matrix(pt, &self.mesh, &self.freq, a)).collect::<Result<_>>()?;
                let mut node_born = Complex64::new(0.0, 0.0);
                for a in 0..=k {
                    let (p, q) = (&rx[a as usize], &rx[(k - a) as usize]);
                    let s: Complex64 = (0..self.d.len()).map(|n| p[(0, n)] * q[(0, n)] * self.d[n]).sum();
                    node_born -= s * binomial(k, a);
                }
                let exact = born_diagonal(&self.potential, &self.freq, x, k, self.mesh.r_trunc);
                out[(i, j)] += exact - node_born;
            }
        }
        Ok(())
    }

    /// `∂^j(−R₀VR₀ + R₀VRVR₀)` by the product rule.
    fn scattered_expansion(&self, rows: &[Point], cols: &[Point], j: u32) -> Result<DMatrix<Complex64>> {
        let rx: Vec<DMatrix<Complex64>> = (0..=j)
            .map(|k| free_cross_matrix(rows, &self.mesh, &self.freq, k).map(|m| scale_cols(m, &self.d)))
            .collect::<Result<_>>()?;
        let ry: Vec<DMatrix<Complex64>> = (0..=j)
            .map(|k| free_cross_matrix(cols, &self.mesh, &self.freq, k).map(|m| m.transpose()))
            .collect::<Result<_>>()?;
        let mut out = DMatrix::zeros(rows.len(), cols.len());
        for m1 in 0..=j {
            out -= (&rx[m1 as usize] * &ry[(j - m1) as usize]) * Complex64::from(binomial(j, m1));
        }
        for n1 in 0..=j {
            for n2 in 0..=(j - n1) {
                let n3 = j - n1 - n2;
                let coef = factorial(j) / (factorial(n1) * factorial(n2) * factorial(n3));
                let inner = scale_cols(self.mesh_derivative(n2), &self.d) * &ry[n3 as usize];
                out += (&rx[n1 as usize] * inner) * Complex64::from(coef);
            }
        }
        self.correct_coincident(rows, cols, j, &mut out)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_resolvent::Sign;
    use crate::lippmann_schwinger::mesh::build_mesh;

    fn bump() -> PotentialSpec {
        PotentialSpec::compact_bump(1.0, 2.0).unwrap()
    }

    fn far_points() -> Vec<Point> {
        vec![[0.13, 0.21, -0.37], [1.1, -0.4, 0.3], [2.5, 0.7, -0.2], [-0.3, 3.1, 1.4]]
    }

    #[test]
    fn zero_potential_reproduces_free_kernel() {
        let mesh = build_mesh(2.0, 6, 14).unwrap();
        let f = ComplexFrequency::new(2.0, 0.2, Sign::Plus).unwrap();
        let h = solve_resolvent(&mesh, &PotentialSpec::zero(), &f).unwrap();
        let pts = far_points();
        for x in &pts {
            for y in &pts {
                if x == y {
                    continue;
                }
                let v = h.evaluate(x, y).unwrap();
                let e = free_kernel_radial(dist3(x, y), &f, 0);
                assert!((v - e).norm() <= 1e-12 * e.norm());
            }
        }
        let k1 = resolvent_derivative(&h, 1).unwrap();
        let k2 = resolvent_derivative(&h, 2).unwrap();
        for i in 0..mesh.len() {
            for j in 0..mesh.len() {
                if i == j {
                    continue;
                }
                let r = dist3(&mesh.nodes[i], &mesh.nodes[j]);
                let e1 = free_kernel_radial(r, &f, 1);
                let e2 = free_kernel_radial(r, &f, 2);
                assert!((k1.values[(i, j)] - e1).norm() <= 1e-4 * e1.norm());
                assert!((k2.values[(i, j)] - e2).norm() <= 1e-3 * e2.norm().max(1e-12));
            }
        }
    }

    #[test]
    fn symmetric_and_conjugate() {
        let mesh = build_mesh(2.0, 8, 26).unwrap();
        let fp = ComplexFrequency::new(2.0, 0.1, Sign::Plus).unwrap();
        let hp = solve_resolvent(&mesh, &bump(), &fp).unwrap();
        let hm = solve_resolvent(&mesh, &bump(), &fp.with_sign(Sign::Minus)).unwrap();
        let pts = far_points();
        let sp = hp.scattered_kernel(&pts, &pts, 0).unwrap();
        let sm = hm.scattered_kernel(&pts, &pts, 0).unwrap();
        let scale = sp.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((&sp - sp.transpose()).iter().all(|z| z.norm() <= 1e-6 * scale));
        assert!((&sm - sp.map(|z| z.conj())).iter().all(|z| z.norm() <= 1e-10 * scale));
        let r = hp.mesh_derivative(0);
        let rs = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((&r - r.transpose()).iter().all(|z| z.norm() <= 1e-10 * rs));
    }

    #[test]
    fn derivative_matches_central_difference() {
        let mesh = build_mesh(2.0, 6, 14).unwrap();
        let f = ComplexFrequency::new(1.5, 0.2, Sign::Plus).unwrap();
        let h = 1e-3;
        let hp = solve_resolvent(&mesh, &bump(), &f.with_lambda(1.5 + h)).unwrap();
        let hm = solve_resolvent(&mesh, &bump(), &f.with_lambda(1.5 - h)).unwrap();
        let h0 = solve_resolvent(&mesh, &bump(), &f).unwrap();
        for k in 0..2u32 {
            let fd = (hp.mesh_derivative(k) - hm.mesh_derivative(k)) / Complex64::from(2.0 * h);
            let d = h0.mesh_derivative(k + 1);
            let scale = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let err = (&fd - &d).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err <= 1e-3 * scale, "k={k}: {err} vs {scale}");
            let pts = far_points();
            let sfd = (hp.scattered_kernel(&pts, &pts, k).unwrap() - hm.scattered_kernel(&pts, &pts, k).unwrap())
                / Complex64::from(2.0 * h);
            let s = h0.scattered_kernel(&pts, &pts, k + 1).unwrap();
            let scale = s.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let err = (&sfd - &s).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err <= 1e-3 * scale, "scattered k={k}: {err} vs {scale}");
        }
    }

    #[test]
    fn direct_and_born_routes_agree() {
        let mesh = build_mesh(2.0, 8, 26).unwrap();
        let f = ComplexFrequency::new(2.0, 0.1, Sign::Plus).unwrap();
        let h = solve_resolvent(&mesh, &bump(), &f).unwrap();
        let pts = far_points();
        let a = h.scattered_kernel(&pts, &pts, 0).unwrap();
        let b = h.scattered_kernel_born(&pts, &pts, 0).unwrap();
        let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((&a - &b).iter().all(|z| z.norm() <= 1e-4 * scale));
    }

    #[test]
    fn strong_attraction_near_resonance_is_flagged_or_solved() {
        let mesh = build_mesh(2.0, 6, 14).unwrap();
        let f = ComplexFrequency::new(1.0, 0.1, Sign::Plus).unwrap();
        let h = solve_resolvent(&mesh, &bump(), &f).unwrap();
        assert!(h.min_singular_value() > NEAR_RESONANCE_THRESHOLD);
        assert!(h.min_singular_value() < 1.5);
    }
}
