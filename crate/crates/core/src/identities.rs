//! Boundary flux `P(t) = u_x(0,t)`, the energy `W(t)`, and the residuals of
//! the mass, energy and momentum identities along a trajectory:
//!
//! ```text
//! d/dt ‖u‖²     = 2 Im(P f̄)
//! d/dt W        = -Re(f' P̄) + ∫ h_t
//! d/dt (u, u_x) = -i|P|² + 2i h(0,t,f) - f f̄' - 2i Re(Vu, u_x) + 2i ∫ h_x
//! ```
//!
//! On the truncated interval the momentum balance also carries `+i|u_x(L)|²`,
//! which is included so the residual measures discretisation error only.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{derivative, edge_gradient_sqr, l2_norm, ComplexField, Grid};
use crate::lift::BoundaryForce;
use crate::nonlinearity::NonlinearitySpec;
use crate::potential::PotentialSpec;
use crate::solver::Trajectory;

/// One-sided second-order slope at `x = 0`.
pub fn boundary_flux(u: &ComplexField) -> Complex64 {
    let v = u.values();
    (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * u.grid().spacing())
}

/// One-sided second-order slope at `x = L`.
pub fn far_flux(u: &ComplexField) -> Complex64 {
    let v = u.values();
    let n = v.len();
    (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * u.grid().spacing())
}

/// `½‖u_x‖² + ∫(½V|u|² + h(x,t,u))`, with the kinetic part on cell edges.
/// `None` without a density.
pub fn hamiltonian_w(
    u: &ComplexField,
    potential: &[f64],
    nonlinearity: &NonlinearitySpec,
    t: f64,
) -> Option<f64> {
    let density = nonlinearity.density()?;
    let grid = u.grid();
    let pot: Vec<f64> = u
        .values()
        .iter()
        .zip(potential)
        .enumerate()
        .map(|(j, (z, v))| 0.5 * v * z.norm_sqr() + (density.h)(grid.x(j), t, *z))
        .collect();
    Some(0.5 * edge_gradient_sqr(u) + grid.trapezoid(&pot))
}

/// `(u, u_x) = ∫ u ū_x`.
pub fn momentum_pairing(u: &ComplexField) -> Complex64 {
    let du = derivative(u);
    let prod: Vec<Complex64> = u.values().iter().zip(du.values()).map(|(a, b)| a * b.conj()).collect();
    u.grid().trapezoid_complex(&prod)
}

/// Both sides of `-2 Re(Vu, u_x) = V(0)|u(0)|² + ∫ V'|u|²` (for `u` vanishing
/// at `x = L`). Needs the derivative of `V`.
pub fn identity_potential_term_check(u: &ComplexField, potential: &PotentialSpec) -> Result<(f64, f64)> {
    let dv = potential
        .derivative()
        .ok_or_else(|| Error::Config("derivative V' not supplied".into()))?;
    let v = potential.total();
    let grid = u.grid();
    let lhs = -2.0 * potential_pairing(u, &v);
    let dens = u.density();
    let weighted: Vec<f64> = dens.iter().zip(dv).map(|(d, w)| d * w).collect();
    let rhs = v[0] * dens[0] + grid.trapezoid(&weighted);
    Ok((lhs, rhs))
}

/// `Re(Vu, u_x)`.
fn potential_pairing(u: &ComplexField, v: &[f64]) -> f64 {
    let du = derivative(u);
    let prod: Vec<f64> = u
        .values()
        .iter()
        .zip(du.values())
        .zip(v)
        .map(|((a, b), w)| w * (a * b.conj()).re)
        .collect();
    u.grid().trapezoid(&prod)
}

/// How `-2 Re(Vu, u_x)` enters the momentum right-hand side.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PotentialTerm {
    /// Quadrature of `Re(Vu, u_x)` directly.
    #[default]
    Direct,
    /// `V(0)|f|² + ∫V'|u|²`, needs `V'`.
    IntegratedByParts,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub times: Vec<f64>,
    pub flux: Vec<Complex64>,
    pub mass: Vec<f64>,
    pub energy: Option<Vec<f64>>,
    pub momentum: Vec<Complex64>,
    pub residual_mass: Vec<f64>,
    pub residual_energy: Option<Vec<f64>>,
    pub residual_momentum: Option<Vec<f64>>,
    /// `‖u(t)‖² - ‖u(0)‖² - ∫₀ᵗ 2 Im(P f̄)` (trapezoid in time).
    pub integrated_mass_residual: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct ResidualSummary {
    pub max_residual_mass: f64,
    pub max_residual_energy: Option<f64>,
    pub max_residual_momentum: Option<f64>,
    pub max_integrated_mass_residual: f64,
    /// `max |‖u(t)‖² - ‖u(0)‖²| / ‖u(0)‖²`.
    pub mass_drift: f64,
    /// `max |W(t) - W(0)| / (1 + |W(0)|)`.
    pub energy_drift: Option<f64>,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

impl IdentityReport {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn summary(&self) -> ResidualSummary {
        let m0 = self.mass.first().copied().unwrap_or(0.0);
        let mass_drift = if m0 > 0.0 {
            self.mass.iter().map(|m| (m - m0).abs() / m0).fold(0.0, f64::max)
        } else {
            sup(&self.mass)
        };
        ResidualSummary {
            max_residual_mass: sup(&self.residual_mass),
            max_residual_energy: self.residual_energy.as_deref().map(sup),
            max_residual_momentum: self.residual_momentum.as_deref().map(sup),
            max_integrated_mass_residual: sup(&self.integrated_mass_residual),
            mass_drift,
            energy_drift: self.energy.as_ref().map(|w| {
                let w0 = w.first().copied().unwrap_or(0.0);
                w.iter().map(|x| (x - w0).abs() / (1.0 + w0.abs())).fold(0.0, f64::max)
            }),
        }
    }

    pub const CSV_HEADER: [&'static str; 11] = [
        "time",
        "mass",
        "energy",
        "re_flux",
        "im_flux",
        "re_momentum",
        "im_momentum",
        "residual_mass",
        "residual_energy",
        "residual_momentum",
        "integrated_mass_residual",
    ];

    /// Tidy CSV, one row per time, 17 significant digits; absent series are
    /// empty cells.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(Self::CSV_HEADER).map_err(csv_err)?;
        let num = |x: f64| format!("{x:.16e}");
        let opt = |s: &Option<Vec<f64>>, k: usize| s.as_ref().map_or(String::new(), |v| num(v[k]));
        for k in 0..self.times.len() {
            w.write_record([
                num(self.times[k]),
                num(self.mass[k]),
                opt(&self.energy, k),
                num(self.flux[k].re),
                num(self.flux[k].im),
                num(self.momentum[k].re),
                num(self.momentum[k].im),
                num(self.residual_mass[k]),
                opt(&self.residual_energy, k),
                opt(&self.residual_momentum, k),
                num(self.integrated_mass_residual[k]),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let bad = |e: String| Error::Parse(format!("identity CSV: {e}"));
        let header = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
        if header.iter().ne(Self::CSV_HEADER) {
            return Err(bad("unexpected header".into()));
        }
        let mut cols: Vec<Vec<Option<f64>>> = vec![Vec::new(); Self::CSV_HEADER.len()];
        for rec in rd.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            for (c, cell) in cols.iter_mut().zip(rec.iter()) {
                c.push(if cell.is_empty() {
                    None
                } else {
                    Some(cell.parse::<f64>().map_err(|e| bad(e.to_string()))?)
                });
            }
        }
        let req = |c: &Vec<Option<f64>>| -> Result<Vec<f64>> {
            c.iter().map(|v| v.ok_or_else(|| bad("missing value".into()))).collect()
        };
        let opt = |c: &Vec<Option<f64>>| -> Option<Vec<f64>> {
            if c.is_empty() {
                return None;
            }
            c.iter().copied().collect()
        };
        let complex = |a: Vec<f64>, b: Vec<f64>| a.into_iter().zip(b).map(|(x, y)| Complex64::new(x, y)).collect();
        Ok(Self {
            times: req(&cols[0])?,
            mass: req(&cols[1])?,
            energy: opt(&cols[2]),
            flux: complex(req(&cols[3])?, req(&cols[4])?),
            momentum: complex(req(&cols[5])?, req(&cols[6])?),
            residual_mass: req(&cols[7])?,
            residual_energy: opt(&cols[8]),
            residual_momentum: opt(&cols[9]),
            integrated_mass_residual: req(&cols[10])?,
        })
    }
}

/// Second-order derivative of uniformly sampled data: centered inside,
/// one-sided three-point at both ends. Needs at least 3 samples.
fn time_derivative<T>(v: &[T], dt: f64) -> Vec<T>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = v.len();
    let mut d = Vec::with_capacity(n);
    d.push((v[1] * 4.0 - v[0] * 3.0 - v[2]) * (0.5 / dt));
    for k in 1..n - 1 {
        d.push((v[k + 1] - v[k - 1]) * (0.5 / dt));
    }
    d.push((v[n - 1] * 3.0 - v[n - 2] * 4.0 + v[n - 3]) * (0.5 / dt));
    d
}

/// `∫ g(x, t, u(x))` by the trapezoidal rule.
fn integrate_density(grid: &Grid, u: &ComplexField, t: f64, g: impl Fn(f64, f64, Complex64) -> f64) -> f64 {
    let vals: Vec<f64> = u.values().iter().enumerate().map(|(j, z)| g(grid.x(j), t, *z)).collect();
    grid.trapezoid(&vals)
}

/// Density derivative in `x` or `t`: the callback, or zero when the density
/// provably does not depend on that variable on the sampled states.
fn density_derivative<'a, F>(
    exact: F,
    fd: impl Fn(f64, f64, Complex64) -> Option<f64>,
    samples: &[(f64, f64, Complex64)],
    what: &str,
) -> Result<Box<dyn Fn(f64, f64, Complex64) -> f64 + 'a>>
where
    F: Fn(f64, f64, Complex64) -> Option<f64> + 'a,
{
    if samples.first().is_some_and(|&(x, t, z)| exact(x, t, z).is_some()) {
        let e = move |x, t, z| exact(x, t, z).unwrap_or(0.0);
        return Ok(Box::new(e));
    }
    let worst = samples
        .iter()
        .map(|&(x, t, z)| fd(x, t, z).unwrap_or(0.0).abs())
        .fold(0.0, f64::max);
    if worst > 1e-9 {
        return Err(Error::Config(format!(
            "Hamiltonian structure: ∂h/∂{what} is nonzero but no callback was supplied"
        )));
    }
    Ok(Box::new(|_, _, _| 0.0))
}

/// Residuals of the three identities at every output time. Needs at least
/// three uniformly spaced times.
pub fn identity_residuals(
    traj: &Trajectory,
    potential: &PotentialSpec,
    nonlinearity: &NonlinearitySpec,
    force: &BoundaryForce,
    potential_term: PotentialTerm,
) -> Result<IdentityReport> {
    let n = traj.times.len();
    let grid = *potential.grid();
    let v = potential.total();
    let flux: Vec<Complex64> = traj.fields.iter().map(boundary_flux).collect();
    let mass: Vec<f64> = traj.fields.iter().map(|u| l2_norm(u).powi(2)).collect();
    let momentum: Vec<Complex64> = traj.fields.iter().map(momentum_pairing).collect();
    let energy: Option<Vec<f64>> = traj
        .fields
        .iter()
        .zip(&traj.times)
        .map(|(u, &t)| hamiltonian_w(u, &v, nonlinearity, t))
        .collect();
    let jets = traj
        .times
        .iter()
        .map(|&t| force.jet2(t))
        .collect::<Result<Vec<_>>>()?;

    // integrated mass identity, trapezoid in time
    let src: Vec<f64> = flux
        .iter()
        .zip(&jets)
        .map(|(p, j)| 2.0 * (p * j[0].conj()).im)
        .collect();
    let mut integrated = vec![0.0; n];
    let mut acc = 0.0;
    for k in 1..n {
        acc += 0.5 * (traj.times[k] - traj.times[k - 1]) * (src[k] + src[k - 1]);
        integrated[k] = mass[k] - mass[0] - acc;
    }

    if n < 3 {
        return Ok(IdentityReport {
            times: traj.times.clone(),
            flux,
            residual_mass: vec![0.0; n],
            residual_energy: energy.as_ref().map(|_| vec![0.0; n]),
            residual_momentum: None,
            mass,
            energy,
            momentum,
            integrated_mass_residual: integrated,
        });
    }
    let dt = traj.times[1] - traj.times[0];
    if traj
        .times
        .windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt)
    {
        return Err(Error::Config(
            "identity residuals need uniformly spaced output times".into(),
        ));
    }

    let dmass = time_derivative(&mass, dt);
    let residual_mass: Vec<f64> = dmass.iter().zip(&src).map(|(d, s)| (d - s).abs()).collect();

    let samples: Vec<(f64, f64, Complex64)> = traj
        .fields
        .iter()
        .zip(&traj.times)
        .flat_map(|(u, &t)| {
            u.values()
                .iter()
                .enumerate()
                .step_by(7)
                .map(move |(j, z)| (grid.x(j), t, *z))
        })
        .collect();

    let residual_energy = match &energy {
        Some(w) => {
            let h_t = density_derivative(
                |x, t, z| nonlinearity.dh_dt(x, t, z),
                |x, t, z| nonlinearity.dh_dt_fd(x, t, z),
                &samples,
                "t",
            )?;
            let dw = time_derivative(w, dt);
            Some(
                (0..n)
                    .map(|k| {
                        let u = &traj.fields[k];
                        let t = traj.times[k];
                        let rhs = -(jets[k][1] * flux[k].conj()).re + integrate_density(&grid, u, t, &h_t);
                        (dw[k] - rhs).abs()
                    })
                    .collect(),
            )
        }
        None => None,
    };

    let residual_momentum = match nonlinearity.density() {
        Some(d) => {
            let h_x = density_derivative(
                |x, t, z| nonlinearity.dh_dx(x, t, z),
                |x, t, z| nonlinearity.dh_dx_fd(x, t, z),
                &samples,
                "x",
            )?;
            let dv = match potential_term {
                PotentialTerm::Direct => None,
                PotentialTerm::IntegratedByParts => Some(potential.derivative().ok_or_else(|| {
                    Error::Config("derivative V' needed for the integrated potential term".into())
                })?),
            };
            let dmom = time_derivative(&momentum, dt);
            let i = Complex64::i();
            Some(
                (0..n)
                    .map(|k| {
                        let u = &traj.fields[k];
                        let t = traj.times[k];
                        let [f, df, _] = jets[k];
                        // -2 Re(Vu, u_x)
                        let pot = match dv {
                            None => -2.0 * potential_pairing(u, &v),
                            Some(dv) => {
                                let dens = u.density();
                                let w: Vec<f64> = dens.iter().zip(dv).map(|(a, b)| a * b).collect();
                                v[0] * f.norm_sqr() + grid.trapezoid(&w)
                            }
                        };
                        let rhs = -i * flux[k].norm_sqr() + i * far_flux(u).norm_sqr() + 2.0 * i * (d.h)(0.0, t, f) - f * df.conj()
                            + i * pot
                            + 2.0 * i * integrate_density(&grid, u, t, &h_x);
                        (dmom[k] - rhs).norm()
                    })
                    .collect(),
            )
        }
        None => None,
    };

    Ok(IdentityReport {
        times: traj.times.clone(),
        flux,
        mass,
        energy,
        momentum,
        residual_mass,
        residual_energy,
        residual_momentum,
        integrated_mass_residual: integrated,
    })
}

/// `log₂(e_k / e_{k+1})` for successive halvings.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
