//! Complex numbers in JSON: written as `[re, im]`, read from either `[re, im]`
//! or a bare real number.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::c64;

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Real(f64),
    Pair([f64; 2]),
}

impl From<Repr> for c64 {
    fn from(r: Repr) -> Self {
        match r {
            Repr::Real(x) => c64::new(x, 0.0),
            Repr::Pair([re, im]) => c64::new(re, im),
        }
    }
}

pub mod complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[c64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<c64>, D::Error> {
        Ok(Vec::<Repr>::deserialize(d)?.into_iter().map(Into::into).collect())
    }
}

pub mod complex_vec_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vec<c64>], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|row| row.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<c64>>, D::Error> {
        Ok(Vec::<Vec<Repr>>::deserialize(d)?.into_iter().map(|row| row.into_iter().map(Into::into).collect()).collect())
    }
}
