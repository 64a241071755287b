//! JSON documents: the configuration file and the lattice descriptor.
//!
//! A descriptor is a normalized `construction` section with every derived
//! field filled in, so it can be fed back wherever a construction is accepted.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::CliError;
use crate::algebra::{factor_rational_prime, Alphabet, QuadraticRing, SplittingKind};
use crate::cfsim::SimulationConfig;
use crate::codes::{LinearCode, NestedCodeChain};
use crate::lattices::{
    construction_a, construction_a_ok, construction_d, construction_pi_a, construction_pi_d,
    LatticeDescriptor, LatticeKind, Structure,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub construction: ConstructionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub max_norm_cap: f64,
}

/// Generator rows, either row-major flat or nested.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rows {
    Flat(Vec<i64>),
    Nested(Vec<Vec<i64>>),
}

impl Rows {
    fn flatten(&self, length: usize) -> Result<Vec<i64>, CliError> {
        match self {
            Rows::Flat(v) => Ok(v.clone()),
            Rows::Nested(rows) => {
                if rows.iter().any(|r| r.len() != length) {
                    return Err(CliError::Schema(format!(
                        "every row must have {length} entries"
                    )));
                }
                Ok(rows.concat())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpec {
    pub prime: u64,
    #[serde(default = "one")]
    pub power: u32,
    #[serde(rename = "N")]
    pub length: usize,
    pub n: usize,
    pub rows: Rows,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub prime: u64,
    #[serde(rename = "N")]
    pub length: usize,
    /// `N` basis vectors of `F_p^N`, row-major.
    pub basis: Rows,
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub d: i64,
    pub p: u64,
    /// Root of the minimal polynomial of `ξ` mod `p` picking the ideal
    /// `(p, ξ - θ)`; defaults to the smallest root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splitting: Option<SplittingKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ideal: Option<String>,
    /// Hermite basis of the ideal, as `[a, b]` coordinates of `a + bξ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<[[i64; 2]; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionSpec {
    pub kind: KindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moduli: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codes: Option<Vec<CodeSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<QuadraticSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KindName {
    #[serde(rename = "a", alias = "A")]
    A,
    #[serde(rename = "d", alias = "D")]
    D,
    #[serde(rename = "pi_a", alias = "pi_A")]
    PiA,
    #[serde(rename = "pi_d", alias = "pi_D")]
    PiD,
    #[serde(rename = "a_ok", alias = "A_OK")]
    AOk,
}

impl From<KindName> for LatticeKind {
    fn from(k: KindName) -> Self {
        match k {
            KindName::A => LatticeKind::A,
            KindName::D => LatticeKind::D,
            KindName::PiA => LatticeKind::PiA,
            KindName::PiD => LatticeKind::PiD,
            KindName::AOk => LatticeKind::AOk,
        }
    }
}

impl From<LatticeKind> for KindName {
    fn from(k: LatticeKind) -> Self {
        match k {
            LatticeKind::A => KindName::A,
            LatticeKind::D => KindName::D,
            LatticeKind::PiA => KindName::PiA,
            LatticeKind::PiD => KindName::PiD,
            LatticeKind::AOk => KindName::AOk,
        }
    }
}

fn construction<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Construction(e.to_string())
}

fn require<'a, T>(field: &'a Option<T>, name: &str, kind: KindName) -> Result<&'a T, CliError> {
    field
        .as_ref()
        .ok_or_else(|| CliError::Schema(format!("construction kind {kind:?} requires `{name}`")))
}

fn forbid<T>(field: &Option<T>, name: &str, kind: KindName) -> Result<(), CliError> {
    if field.is_some() {
        return Err(CliError::Schema(format!(
            "construction kind {kind:?} does not take `{name}`"
        )));
    }
    Ok(())
}

fn build_code(spec: &CodeSpec, alphabet: Alphabet) -> Result<LinearCode, CliError> {
    let data = spec.rows.flatten(spec.length)?;
    LinearCode::from_row_major(alphabet, spec.length, spec.n, &data).map_err(construction)
}

fn real_code(spec: &CodeSpec) -> Result<LinearCode, CliError> {
    let alphabet = Alphabet::integers_mod(spec.prime, spec.power).map_err(construction)?;
    build_code(spec, alphabet)
}

fn code_spec(code: &LinearCode, prime: u64, power: u32) -> CodeSpec {
    CodeSpec {
        prime,
        power,
        length: code.length(),
        n: code.dimension(),
        rows: Rows::Flat(code.rows().iter().flatten().map(|&x| x as i64).collect()),
    }
}

impl ConstructionSpec {
    /// Builds the lattice. Missing or misplaced keys are schema errors; values
    /// the constructions reject are construction errors.
    pub fn build(&self) -> Result<LatticeDescriptor, CliError> {
        let kind = self.kind;
        let lattice = match kind {
            KindName::A | KindName::PiA => {
                forbid(&self.chain, "chain", kind)?;
                forbid(&self.levels, "levels", kind)?;
                forbid(&self.quadratic, "quadratic", kind)?;
                let specs = require(&self.codes, "codes", kind)?;
                let codes = specs.iter().map(real_code).collect::<Result<Vec<_>, _>>()?;
                if kind == KindName::A {
                    if codes.len() != 1 {
                        return Err(CliError::Schema(
                            "construction A takes exactly one code".into(),
                        ));
                    }
                    construction_a(codes.into_iter().next().unwrap()).map_err(construction)?
                } else {
                    construction_pi_a(codes).map_err(construction)?
                }
            }
            KindName::PiD => {
                forbid(&self.chain, "chain", kind)?;
                forbid(&self.levels, "levels", kind)?;
                forbid(&self.quadratic, "quadratic", kind)?;
                let q = *require(&self.q, "q", kind)?;
                let specs = require(&self.codes, "codes", kind)?;
                let codes = specs.iter().map(real_code).collect::<Result<Vec<_>, _>>()?;
                construction_pi_d(q, codes).map_err(construction)?
            }
            KindName::D => {
                forbid(&self.codes, "codes", kind)?;
                forbid(&self.quadratic, "quadratic", kind)?;
                let spec = require(&self.chain, "chain", kind)?;
                let levels = *require(&self.levels, "levels", kind)?;
                let flat = spec.basis.flatten(spec.length)?;
                if flat.len() != spec.length * spec.length {
                    return Err(CliError::Schema(format!(
                        "chain basis must hold {0}x{0} entries",
                        spec.length
                    )));
                }
                let p = spec.prime as i64;
                if p < 2 {
                    return Err(construction(crate::algebra::AlgebraError::NotPrime(
                        spec.prime,
                    )));
                }
                let basis: Vec<Vec<u64>> = flat
                    .chunks(spec.length.max(1))
                    .map(|r| r.iter().map(|&x| x.rem_euclid(p) as u64).collect())
                    .collect();
                let chain = NestedCodeChain::new(spec.prime, basis, spec.dims.clone())
                    .map_err(construction)?;
                construction_d(chain, levels).map_err(construction)?
            }
            KindName::AOk => {
                forbid(&self.chain, "chain", kind)?;
                forbid(&self.levels, "levels", kind)?;
                let quad = require(&self.quadratic, "quadratic", kind)?;
                let specs = require(&self.codes, "codes", kind)?;
                if specs.len() != 1 {
                    return Err(CliError::Schema(
                        "construction A over O_K takes exactly one code".into(),
                    ));
                }
                let ring = QuadraticRing::new(quad.d).map_err(construction)?;
                let factors = factor_rational_prime(&ring, quad.p).map_err(construction)?;
                let ideal = match quad.theta {
                    None => *factors.primary(),
                    Some(t) => *factors
                        .ideals
                        .iter()
                        .find(|i| i.theta() == Some(t))
                        .ok_or_else(|| {
                            construction(format!(
                                "no prime ideal above {} with theta = {t}",
                                quad.p
                            ))
                        })?,
                };
                let spec = &specs[0];
                if spec.prime != ideal.prime() || spec.power != ideal.inertial_degree() {
                    return Err(construction(format!(
                        "code alphabet F_{}^{} does not match the residue field of size {}",
                        spec.prime,
                        spec.power,
                        ideal.norm()
                    )));
                }
                let residue = crate::algebra::ResidueFieldMap::new(ideal).map_err(construction)?;
                let code = build_code(spec, *residue.field())?;
                construction_a_ok(code, ideal).map_err(construction)?
            }
        };
        self.check_derived(&lattice)?;
        Ok(lattice)
    }

    /// Derived fields present in the input must agree with the lattice built.
    fn check_derived(&self, lattice: &LatticeDescriptor) -> Result<(), CliError> {
        let normal = describe(lattice);
        let mismatch = |name: &str| {
            Err(construction(format!(
                "`{name}` disagrees with the construction"
            )))
        };
        if self.dimension.is_some_and(|d| Some(d) != normal.dimension) {
            return mismatch("dimension");
        }
        if self.kind != KindName::PiD && self.q.is_some() && self.q != normal.q {
            return mismatch("q");
        }
        if let Some(m) = &self.moduli {
            if Some(m) != normal.moduli.as_ref() {
                return mismatch("moduli");
            }
        }
        if let (Some(given), Some(actual)) = (&self.quadratic, &normal.quadratic) {
            if given.splitting.is_some_and(|s| Some(s) != actual.splitting)
                || given
                    .ideal
                    .as_ref()
                    .is_some_and(|s| Some(s) != actual.ideal.as_ref())
                || given.basis.is_some_and(|b| Some(b) != actual.basis)
            {
                return mismatch("quadratic");
            }
        }
        Ok(())
    }
}

/// Normalized specification of a lattice, with derived fields filled in.
pub fn describe(lattice: &LatticeDescriptor) -> ConstructionSpec {
    let mut spec = ConstructionSpec {
        kind: lattice.kind().into(),
        dimension: Some(lattice.dimension()),
        q: lattice.modulus(),
        moduli: None,
        codes: None,
        chain: None,
        levels: None,
        quadratic: None,
    };
    match lattice.structure() {
        Structure::Crt { map, codes } => {
            spec.moduli = Some(map.moduli().to_vec());
            spec.codes = Some(
                codes
                    .iter()
                    .zip(map.factors())
                    .map(|(c, &(p, e))| code_spec(c, p, e))
                    .collect(),
            );
        }
        Structure::Chain { chain, levels } => {
            spec.moduli = lattice.modulus().map(|q| vec![q]);
            spec.levels = Some(*levels);
            spec.chain = Some(ChainSpec {
                prime: chain.prime(),
                length: chain.length(),
                basis: Rows::Flat(chain.basis().iter().flatten().map(|&x| x as i64).collect()),
                dims: chain.dims().to_vec(),
            });
        }
        Structure::Quadratic { residue, code } => {
            let ideal = residue.ideal();
            let [b1, b2] = ideal.z_basis();
            spec.codes = Some(vec![code_spec(
                code,
                ideal.prime(),
                ideal.inertial_degree(),
            )]);
            spec.quadratic = Some(QuadraticSpec {
                d: ideal.ring().d(),
                p: ideal.prime(),
                theta: ideal.theta(),
                splitting: Some(ideal.kind()),
                ideal: Some(ideal.to_string()),
                basis: Some([[b1.a, b1.b], [b2.a, b2.b]]),
            });
        }
    }
    spec
}

/// Serialized descriptor: pretty JSON with a trailing newline.
pub fn descriptor_json(lattice: &LatticeDescriptor) -> String {
    let mut s = serde_json::to_string_pretty(&describe(lattice)).expect("descriptor serializes");
    s.push('\n');
    s
}

fn schema<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Schema(e.to_string())
}

pub fn parse_config(text: &str) -> Result<ConfigDocument, CliError> {
    serde_json::from_str(text).map_err(schema)
}

/// Accepts a full configuration document or a bare construction/descriptor.
pub fn parse_construction(text: &str) -> Result<ConstructionSpec, CliError> {
    let value: Value = serde_json::from_str(text).map_err(schema)?;
    if value.get("construction").is_some() {
        Ok(serde_json::from_value::<ConfigDocument>(value)
            .map_err(schema)?
            .construction)
    } else {
        serde_json::from_value(value).map_err(schema)
    }
}
