//! Serde adapters writing complex points as `[re, im]` pairs.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(pts: &[C64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = pts.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

pub mod one {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

pub mod pairs {
    use super::*;

    pub fn serialize<S: Serializer>(pts: &[(C64, C64)], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<[[f64; 2]; 2]> = pts.iter().map(|(a, b)| [[a.re, a.im], [b.re, b.im]]).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(C64, C64)>, D::Error> {
        let rows = Vec::<[[f64; 2]; 2]>::deserialize(d)?;
        Ok(rows
            .into_iter()
            .map(|[a, b]| (C64::new(a[0], a[1]), C64::new(b[0], b[1])))
            .collect())
    }
}
