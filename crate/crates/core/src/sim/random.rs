//! Random streams and sampling.
//!
//! Every run derives its generators from one `u64` seed using ChaCha8 with
//! distinct stream ids: stream 0 drives arrivals, stream 1 the sampling
//! decisions, and stream `2 + q` the service times of sub-queue `q`. Service
//! times are drawn when a job arrives, one per sub-queue, whether or not the
//! sub-task is later purged, so runs of different variants with the same
//! seed see identical arrival and service sequences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Weibull};
use statrs::function::gamma::gamma;

use crate::analytic::ServiceDist;
use crate::error::{Error, Result};

const ARRIVAL_STREAM: u64 = 0;
const SAMPLING_STREAM: u64 = 1;
const FIRST_SERVICE_STREAM: u64 = 2;

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ArrivalProcess {
    Poisson,
    Deterministic,
}

impl std::str::FromStr for ArrivalProcess {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson" | "exp" => Ok(ArrivalProcess::Poisson),
            "det" | "deterministic" => Ok(ArrivalProcess::Deterministic),
            other => Err(Error::Domain(format!("unknown arrival process {other:?}"))),
        }
    }
}

impl std::fmt::Display for ArrivalProcess {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ArrivalProcess::Poisson => "poisson",
            ArrivalProcess::Deterministic => "det",
        })
    }
}

/// A positive-valued sampler with a fixed mean.
#[derive(Clone, Copy, Debug)]
enum Sampler {
    Exp(Exp<f64>),
    Fixed(f64),
    Weibull(Weibull<f64>),
}

impl Sampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Exp(d) => d.sample(rng),
            Sampler::Fixed(v) => *v,
            Sampler::Weibull(d) => d.sample(rng),
        }
    }
}

fn service_sampler(dist: ServiceDist, mu: f64) -> Result<Sampler> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidDistribution(format!("service rate must be positive, got {mu}")));
    }
    Ok(match dist {
        ServiceDist::Exponential => Sampler::Exp(Exp::new(mu).map_err(|e| Error::InvalidDistribution(e.to_string()))?),
        ServiceDist::Deterministic => Sampler::Fixed(1.0 / mu),
        ServiceDist::Weibull { shape } => {
            // mean = scale * Gamma(1 + 1/shape)
            let scale = 1.0 / (mu * gamma(1.0 + 1.0 / shape));
            Sampler::Weibull(Weibull::new(scale, shape).map_err(|e| Error::InvalidDistribution(e.to_string()))?)
        }
    })
}

/// All random input of one run.
pub struct Streams {
    arrivals: ChaCha8Rng,
    sampling: ChaCha8Rng,
    services: Vec<ChaCha8Rng>,
    interarrival: Option<Sampler>,
    service: Sampler,
}

impl Streams {
    /// `lambda = 0` yields no interarrival sampler; the engine then feeds
    /// jobs one at a time into an empty system.
    pub fn new(seed: u64, n: usize, lambda: f64, mu: f64, arrival: ArrivalProcess, service: ServiceDist) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidDistribution(format!("arrival rate must be non-negative, got {lambda}")));
        }
        let interarrival = if lambda == 0.0 {
            None
        } else {
            Some(match arrival {
                ArrivalProcess::Poisson => Sampler::Exp(Exp::new(lambda).map_err(|e| Error::InvalidDistribution(e.to_string()))?),
                ArrivalProcess::Deterministic => Sampler::Fixed(1.0 / lambda),
            })
        };
        Ok(Streams {
            arrivals: stream(seed, ARRIVAL_STREAM),
            sampling: stream(seed, SAMPLING_STREAM),
            services: (0..n as u64).map(|q| stream(seed, FIRST_SERVICE_STREAM + q)).collect(),
            interarrival,
            service: service_sampler(service, mu)?,
        })
    }

    pub fn next_interarrival(&mut self) -> Option<f64> {
        self.interarrival.map(|s| s.sample(&mut self.arrivals))
    }

    pub fn service_times(&mut self) -> Vec<f64> {
        let service = self.service;
        self.services.iter_mut().map(|rng| service.sample(rng)).collect()
    }

    pub fn sample_decision(&mut self, rate: f64) -> bool {
        self.sampling.random::<f64>() < rate
    }
}
