//! Named analytic families, selected from the command line by strings such
//! as `blaschke:n=3,theta=0.1` or `rigid:rho=0.4`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ArnoldFamily, CircleLift, RigidRotation, Shifted, SineFamily};
use crate::blaschke::tuning::{tune_phase, TuneOptions, TuneResult};
use crate::blaschke::BlaschkeFraction;
use crate::contfrac::ContinuedFraction;
use crate::error::{Error, Result};

/// A family together with its parameters. A phase left as `None` is tuned to
/// the run's target rotation number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilySpec {
    Rigid { rho: f64 },
    Sine { omega: f64, amplitude: f64 },
    Arnold { theta: Option<f64> },
    Blaschke { n: u32, theta: Option<f64> },
    BlaschkePrecomposed { n: u32, theta: Option<f64>, a: f64 },
    Registered { name: String, params: Vec<f64> },
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn phase(t: &Option<f64>) -> String {
            t.map_or_else(String::new, |t| format!(",theta={t}"))
        }
        match self {
            FamilySpec::Rigid { rho } => write!(f, "rigid:rho={rho}"),
            FamilySpec::Sine { omega, amplitude } => {
                write!(f, "sine:omega={omega},amplitude={amplitude}")
            }
            FamilySpec::Arnold { theta } => match theta {
                Some(t) => write!(f, "arnold:theta={t}"),
                None => write!(f, "arnold"),
            },
            FamilySpec::Blaschke { n, theta } => write!(f, "blaschke:n={n}{}", phase(theta)),
            FamilySpec::BlaschkePrecomposed { n, theta, a } => {
                write!(f, "blaschke-precomposed:n={n},a={a}{}", phase(theta))
            }
            FamilySpec::Registered { name, params } => {
                let p: Vec<String> = params.iter().map(|v| v.to_string()).collect();
                write!(f, "{name}:{}", p.join(","))
            }
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

impl FamilySpec {
    /// Parses `name[:key=value,...]`. Unknown names become
    /// [`FamilySpec::Registered`] with their values in order; keys are
    /// optional there.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let name = name.trim();
        let mut keyed = BTreeMap::new();
        let mut positional = Vec::new();
        for item in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, value) = match item.split_once('=') {
                Some((k, v)) => (Some(k.trim()), v.trim()),
                None => (None, item),
            };
            let v: f64 = value
                .parse()
                .map_err(|_| bad(format!("family parameter `{item}` is not a number")))?;
            positional.push(v);
            if let Some(k) = key {
                if keyed.insert(k.to_string(), v).is_some() {
                    return Err(bad(format!("family parameter `{k}` given twice")));
                }
            }
        }
        let known: &[&str] = match name {
            "rigid" => &["rho"],
            "sine" => &["omega", "amplitude"],
            "arnold" => &["theta"],
            "blaschke" => &["n", "theta"],
            "blaschke-precomposed" => &["n", "theta", "a"],
            _ => return Ok(FamilySpec::Registered { name: name.to_string(), params: positional }),
        };
        if keyed.len() != positional.len() {
            return Err(bad(format!("parameters of `{name}` must be given as key=value")));
        }
        if let Some(k) = keyed.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(bad(format!("unknown parameter `{k}` for family `{name}`")));
        }
        let need = |k: &str| keyed.get(k).copied().ok_or_else(|| bad(format!("family `{name}` needs `{k}`")));
        let degree = |v: f64| -> Result<u32> {
            if v.fract() != 0.0 || !(0.0..=u32::MAX as f64).contains(&v) {
                return Err(bad(format!("n must be a positive integer, got {v}")));
            }
            Ok(v as u32)
        };
        let theta = keyed.get("theta").copied();
        Ok(match name {
            "rigid" => FamilySpec::Rigid { rho: need("rho")? },
            "sine" => FamilySpec::Sine { omega: need("omega")?, amplitude: need("amplitude")? },
            "arnold" => FamilySpec::Arnold { theta },
            "blaschke" => FamilySpec::Blaschke { n: degree(need("n")?)?, theta },
            _ => FamilySpec::BlaschkePrecomposed { n: degree(need("n")?)?, theta, a: need("a")? },
        })
    }

    /// Whether resolving the spec requires a target rotation number.
    pub fn needs_tuning(&self) -> bool {
        matches!(
            self,
            FamilySpec::Arnold { theta: None }
                | FamilySpec::Blaschke { theta: None, .. }
                | FamilySpec::BlaschkePrecomposed { theta: None, .. }
        )
    }
}

type Builder = dyn Fn(&[f64]) -> Result<Arc<dyn CircleLift>> + Send + Sync;

/// User-supplied families keyed by name.
#[derive(Default)]
pub struct FamilyRegistry {
    builders: BTreeMap<String, Box<Builder>>,
}

impl fmt::Debug for FamilyRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.builders.keys()).finish()
    }
}

impl FamilyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register<F>(&mut self, name: &str, builder: F)
    where
        F: Fn(&[f64]) -> Result<Arc<dyn CircleLift>> + Send + Sync + 'static,
    {
        self.builders.insert(name.to_string(), Box::new(builder));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.builders.keys().map(String::as_str)
    }

    pub fn build(&self, name: &str, params: &[f64]) -> Result<Arc<dyn CircleLift>> {
        let b = self
            .builders
            .get(name)
            .ok_or_else(|| bad(format!("unknown family `{name}`")))?;
        b(params)
    }

    /// Builds the map of `spec`, tuning an unset phase to `target`.
    pub fn resolve(
        &self,
        spec: &FamilySpec,
        target: Option<&ContinuedFraction>,
        opts: &TuneOptions,
    ) -> Result<ResolvedFamily> {
        let tune = |base: &dyn CircleLift| -> Result<TuneResult> {
            let target = target.ok_or_else(|| bad(format!("family `{spec}` has no phase and no target to tune to")))?;
            tune_phase(base, target, opts)
        };
        let mut tuning: Option<TuneResult> = None;
        let mut endpoints: Option<[Arc<dyn CircleLift>; 2]> = None;
        let map: Arc<dyn CircleLift> = match spec {
            FamilySpec::Rigid { rho } => Arc::new(RigidRotation::new(*rho)),
            FamilySpec::Sine { omega, amplitude } => {
                Arc::new(SineFamily { omega: *omega, amplitude: *amplitude })
            }
            FamilySpec::Arnold { theta } => {
                let theta = match theta {
                    Some(t) => *t,
                    None => {
                        let res = tune(&ArnoldFamily { theta: 0.0 })?;
                        let (lo, hi) = res.bracket;
                        endpoints = Some([
                            Arc::new(ArnoldFamily { theta: lo }),
                            Arc::new(ArnoldFamily { theta: hi }),
                        ]);
                        let t = res.theta;
                        tuning = Some(res);
                        t
                    }
                };
                Arc::new(ArnoldFamily { theta })
            }
            FamilySpec::Blaschke { n, theta } | FamilySpec::BlaschkePrecomposed { n, theta, .. } => {
                let model = BlaschkeFraction::build(*n)?;
                let lift = match spec {
                    FamilySpec::BlaschkePrecomposed { a, .. } => model.precomposed_lift(*a)?,
                    _ => model.circle_lift()?,
                };
                let theta = match theta {
                    Some(t) => *t,
                    None => {
                        let res = tune(&lift)?;
                        let (lo, hi) = res.bracket;
                        endpoints = Some([Arc::new(lift.with_theta(lo)), Arc::new(lift.with_theta(hi))]);
                        let t = res.theta;
                        tuning = Some(res);
                        t
                    }
                };
                Arc::new(lift.with_theta(theta))
            }
            FamilySpec::Registered { name, params } => self.build(name, params)?,
        };
        let bracket = endpoints.map(|[lo, hi]| [normalize(lo), normalize(hi)]);
        Ok(ResolvedFamily { spec: spec.clone(), map: normalize(map), tuning, bracket })
    }
}

/// Translates the lift by an integer so that `0 <= F(0) < 1`.
fn normalize(map: Arc<dyn CircleLift>) -> Arc<dyn CircleLift> {
    let k = map.lift(0.0).floor();
    if k == 0.0 || !k.is_finite() {
        map
    } else {
        Arc::new(Shifted { base: map, shift: -k })
    }
}

/// A built family member, with the tuning record when the phase was tuned.
#[derive(Clone, Debug)]
pub struct ResolvedFamily {
    pub spec: FamilySpec,
    pub map: Arc<dyn CircleLift>,
    pub tuning: Option<TuneResult>,
    /// Members at the two ends of the final tuning bracket. Quantities that
    /// differ between them are not determined by the tuning.
    pub bracket: Option<[Arc<dyn CircleLift>; 2]>,
}

impl ResolvedFamily {
    /// An untuned member wrapping `map`.
    pub fn fixed(spec: FamilySpec, map: Arc<dyn CircleLift>) -> Self {
        Self { spec, map, tuning: None, bracket: None }
    }

    pub fn label(&self) -> String {
        self.spec.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_builtins() {
        assert_eq!(
            FamilySpec::parse("blaschke:n=3,theta=0.1").unwrap(),
            FamilySpec::Blaschke { n: 3, theta: Some(0.1) }
        );
        assert_eq!(FamilySpec::parse("blaschke:n=5").unwrap(), FamilySpec::Blaschke { n: 5, theta: None });
        assert_eq!(
            FamilySpec::parse("blaschke-precomposed:n=3,a=0.3").unwrap(),
            FamilySpec::BlaschkePrecomposed { n: 3, theta: None, a: 0.3 }
        );
        assert_eq!(FamilySpec::parse("rigid:rho=0.25").unwrap(), FamilySpec::Rigid { rho: 0.25 });
        assert_eq!(FamilySpec::parse("arnold").unwrap(), FamilySpec::Arnold { theta: None });
        assert_eq!(
            FamilySpec::parse("mine:1,2.5").unwrap(),
            FamilySpec::Registered { name: "mine".into(), params: vec![1.0, 2.5] }
        );
    }

    #[test]
    fn parse_errors() {
        for s in ["rigid", "rigid:rho=x", "blaschke:n=3.5", "blaschke:n=3,b=1", "sine:0.1,0.2", "rigid:rho=1,rho=2"] {
            assert!(matches!(FamilySpec::parse(s), Err(Error::Domain(_))), "{s}");
        }
    }

    #[test]
    fn display_round_trips() {
        for s in ["blaschke:n=3,theta=0.1", "blaschke-precomposed:n=5,a=0.3", "rigid:rho=0.25", "arnold", "mine:1,2.5"] {
            let spec = FamilySpec::parse(s).unwrap();
            assert_eq!(FamilySpec::parse(&spec.to_string()).unwrap(), spec);
        }
    }

    #[test]
    fn json_shape() {
        let spec = FamilySpec::BlaschkePrecomposed { n: 3, theta: None, a: 0.3 };
        let v = serde_json::to_value(&spec).unwrap();
        assert_eq!(v["family"], "blaschke-precomposed");
        assert_eq!(serde_json::from_value::<FamilySpec>(v).unwrap(), spec);
    }

    #[test]
    fn registry_builds_user_families() {
        let mut reg = FamilyRegistry::new();
        reg.register("shifted-rigid", |p: &[f64]| {
            if p.len() != 1 {
                return Err(Error::Domain("one parameter".into()));
            }
            Ok(Arc::new(RigidRotation { rho: p[0] }) as Arc<dyn CircleLift>)
        });
        let spec = FamilySpec::parse("shifted-rigid:2.25").unwrap();
        let fam = reg.resolve(&spec, None, &TuneOptions::default()).unwrap();
        // integer translation into [0, 1)
        assert_eq!(fam.map.lift(0.0), 0.25);
        assert!(reg.resolve(&FamilySpec::parse("other:1").unwrap(), None, &TuneOptions::default()).is_err());
        assert_eq!(reg.names().collect::<Vec<_>>(), ["shifted-rigid"]);
    }

    #[test]
    fn untuned_phase_needs_target() {
        let reg = FamilyRegistry::new();
        let spec = FamilySpec::Arnold { theta: None };
        assert!(spec.needs_tuning());
        assert!(matches!(reg.resolve(&spec, None, &TuneOptions::default()), Err(Error::Domain(_))));
        let fam = reg.resolve(&spec, Some(&ContinuedFraction::golden(40)), &TuneOptions::default()).unwrap();
        let t = fam.tuning.unwrap();
        assert!((t.achieved.rho - 0.618_033_988_749_894_8).abs() < 1e-8);
    }
}
