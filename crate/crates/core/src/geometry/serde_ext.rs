//! JSON helpers for extended reals: `+inf` is written as the string `"inf"`.

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Ext {
    Num(f64),
    Tag(String),
}

fn to_ext(v: f64) -> Ext {
    if v == f64::INFINITY {
        Ext::Tag("inf".into())
    } else if v == f64::NEG_INFINITY {
        Ext::Tag("-inf".into())
    } else {
        Ext::Num(v)
    }
}

fn from_ext<E: de::Error>(e: Ext) -> Result<f64, E> {
    match e {
        Ext::Num(v) => Ok(v),
        Ext::Tag(s) if s == "inf" || s == "+inf" => Ok(f64::INFINITY),
        Ext::Tag(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
        Ext::Tag(s) => Err(E::custom(format!("expected a number or \"inf\", found \"{s}\""))),
    }
}

pub fn serialize_vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for &x in v {
        seq.serialize_element(&to_ext(x))?;
    }
    seq.end()
}

pub fn deserialize_vec<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    struct V;
    impl<'de> Visitor<'de> for V {
        type Value = Vec<f64>;
        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("an array of numbers or \"inf\"")
        }
        fn visit_seq<A: SeqAccess<'de>>(self, mut a: A) -> Result<Vec<f64>, A::Error> {
            let mut out = Vec::new();
            while let Some(e) = a.next_element::<Ext>()? {
                out.push(from_ext(e)?);
            }
            Ok(out)
        }
    }
    d.deserialize_seq(V)
}

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    to_ext(*v).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    from_ext(Ext::deserialize(d)?)
}
