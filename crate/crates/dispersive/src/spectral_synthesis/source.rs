use std::sync::Arc;

use crate::error::{Error, Result};
use crate::free_resolvent::ComplexFrequency;
use crate::lippmann_schwinger::{solve_resolvent_shared, QuadratureMesh, RadialParams, RadialResolvent, ResolventHandle};
use crate::lippmann_schwinger::PotentialSpec;

#[derive(Debug, Clone)]
pub enum FactoryBackend {
    Mesh(Arc<QuadratureMesh>),
    Radial(RadialParams),
}

/// Produces resolvent handles of one potential at arbitrary spectral points.
#[derive(Debug, Clone)]
pub struct ResolventFactory {
    pub potential: PotentialSpec,
    pub backend: FactoryBackend,
}

impl ResolventFactory {
    pub fn mesh(potential: PotentialSpec, mesh: Arc<QuadratureMesh>) -> Self {
        Self { potential, backend: FactoryBackend::Mesh(mesh) }
    }

    pub fn radial(potential: PotentialSpec, params: RadialParams) -> Result<Self> {
        if !potential.radial {
            return Err(Error::domain("potential.radial", "partial-wave backend needs a radial potential"));
        }
        Ok(Self { potential, backend: FactoryBackend::Radial(params) })
    }

    pub fn solve(&self, freq: &ComplexFrequency) -> Result<Box<dyn ResolventHandle>> {
        Ok(match &self.backend {
            FactoryBackend::Mesh(m) => Box::new(solve_resolvent_shared(m.clone(), &self.potential, freq)?),
            FactoryBackend::Radial(p) => Box::new(RadialResolvent::new(&self.potential, freq, p.r_max, p.settings)?),
        })
    }

    /// Radius beyond which the discretized potential is absent or negligible.
    pub fn potential_reach(&self) -> f64 {
        let cut = match &self.backend {
            FactoryBackend::Mesh(m) => m.r_trunc,
            FactoryBackend::Radial(p) => p.r_max,
        };
        self.potential.support_radius().unwrap_or(cut).min(cut)
    }

    /// Truncation radius used for the grid reach requirement: the support of
    /// a compact potential, otherwise its core scale.
    pub fn r_trunc(&self) -> f64 {
        match &self.backend {
            FactoryBackend::Mesh(m) => m.r_trunc.min(self.potential.support_radius().unwrap_or(m.r_trunc)),
            FactoryBackend::Radial(_) => self.potential.support_radius().unwrap_or(self.potential.scale),
        }
    }
}
