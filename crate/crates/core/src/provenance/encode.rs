use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use super::{ObjProv, ProvValue};

/// Replacement for volatile fields before hashing.
pub const VOLATILE_MARKER: &str = "<REDACTED-VOLATILE>";

const TAG_STR: u8 = 0x01;
const TAG_INT: u8 = 0x02;
const TAG_FLT: u8 = 0x03;
const TAG_BOOL: u8 = 0x04;
const TAG_TIMESTAMP: u8 = 0x05;
const TAG_HASH: u8 = 0x06;
const TAG_LIST: u8 = 0x07;
const TAG_MAP: u8 = 0x08;
const TAG_OBJ: u8 = 0x09;

/// Instance keys describing the host or the user rather than the computation.
const VOLATILE_KEYS: &[&str] = &["os-name", "os-arch", "user-info"];

pub fn is_volatile_key(key: &str) -> bool {
    VOLATILE_KEYS.contains(&key)
}

/// Deterministic byte encoding.
///
/// One tag byte per variant; strings are a big-endian `u32` byte length and
/// UTF-8 bytes; integers, floats (IEEE-754 bit pattern) and timestamps are
/// big-endian. Lists and maps carry a `u32` element count so the encoding is
/// injective. Map entries are written in key byte order. An object is its
/// class name followed by the map `{"config": .., "instance": ..}`.
pub fn canonical_encode(v: &ProvValue) -> Vec<u8> {
    let mut out = Vec::new();
    encode_into(v, &mut out);
    out
}

fn put_str(s: &str, out: &mut Vec<u8>) {
    let len = u32::try_from(s.len()).expect("string longer than u32::MAX bytes");
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn put_len(n: usize, out: &mut Vec<u8>) {
    let len = u32::try_from(n).expect("collection longer than u32::MAX");
    out.extend_from_slice(&len.to_be_bytes());
}

fn put_map(m: &BTreeMap<String, ProvValue>, out: &mut Vec<u8>) {
    out.push(TAG_MAP);
    put_len(m.len(), out);
    for (k, v) in m {
        put_str(k, out);
        encode_into(v, out);
    }
}

fn encode_into(v: &ProvValue, out: &mut Vec<u8>) {
    match v {
        ProvValue::Str(s) => {
            out.push(TAG_STR);
            put_str(s, out);
        }
        ProvValue::Int(i) => {
            out.push(TAG_INT);
            out.extend_from_slice(&i.to_be_bytes());
        }
        ProvValue::Flt(f) => {
            out.push(TAG_FLT);
            out.extend_from_slice(&f.to_bits().to_be_bytes());
        }
        ProvValue::Bool(b) => {
            out.push(TAG_BOOL);
            out.push(u8::from(*b));
        }
        ProvValue::Timestamp(t) => {
            out.push(TAG_TIMESTAMP);
            out.extend_from_slice(&t.seconds.to_be_bytes());
            out.extend_from_slice(&t.nanos.to_be_bytes());
        }
        ProvValue::Hash { algorithm, digest } => {
            out.push(TAG_HASH);
            put_str(algorithm, out);
            put_str(digest, out);
        }
        ProvValue::List(items) => {
            out.push(TAG_LIST);
            put_len(items.len(), out);
            for item in items {
                encode_into(item, out);
            }
        }
        ProvValue::Map(m) => put_map(m, out),
        ProvValue::Obj(o) => {
            out.push(TAG_OBJ);
            put_str(&o.class_name, out);
            // Equivalent to put_map over {"config", "instance"} without cloning.
            out.push(TAG_MAP);
            put_len(2, out);
            put_str("config", out);
            put_map(&o.config, out);
            put_str("instance", out);
            put_map(&o.instance, out);
        }
    }
}

/// Copy of `v` with every timestamp and every volatile instance field
/// replaced by [`VOLATILE_MARKER`].
pub fn scrub_volatile(v: &ProvValue) -> ProvValue {
    let marker = || ProvValue::Str(VOLATILE_MARKER.to_string());
    match v {
        ProvValue::Timestamp(_) => marker(),
        ProvValue::List(items) => ProvValue::List(items.iter().map(scrub_volatile).collect()),
        ProvValue::Map(m) => ProvValue::Map(
            m.iter()
                .map(|(k, v)| (k.clone(), scrub_volatile(v)))
                .collect(),
        ),
        ProvValue::Obj(o) => ProvValue::Obj(ObjProv {
            class_name: o.class_name.clone(),
            config: o
                .config
                .iter()
                .map(|(k, v)| (k.clone(), scrub_volatile(v)))
                .collect(),
            instance: o
                .instance
                .iter()
                .map(|(k, v)| {
                    let v = if is_volatile_key(k) {
                        marker()
                    } else {
                        scrub_volatile(v)
                    };
                    (k.clone(), v)
                })
                .collect(),
        }),
        other => other.clone(),
    }
}

/// Lowercase hex SHA-256 of the canonical encoding with volatile fields masked.
pub fn provenance_hash(v: &ProvValue) -> String {
    hex::encode(Sha256::digest(canonical_encode(&scrub_volatile(v))))
}

#[cfg(test)]
mod tests {
    use super::super::Timestamp;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bool_encoding() {
        assert_eq!(canonical_encode(&ProvValue::Bool(true)), vec![0x04, 0x01]);
        assert_eq!(canonical_encode(&ProvValue::Bool(false)), vec![0x04, 0x00]);
    }

    #[test]
    fn float_encoding_is_bit_pattern() {
        assert_eq!(
            canonical_encode(&ProvValue::Flt(1.0)),
            vec![0x03, 0x3F, 0xF0, 0, 0, 0, 0, 0, 0]
        );
    }

    #[test]
    fn int_and_str_encoding() {
        assert_eq!(canonical_encode(&ProvValue::Int(-2)), {
            let mut v = vec![0x02];
            v.extend_from_slice(&[0xFF; 7]);
            v.push(0xFE);
            v
        });
        assert_eq!(
            canonical_encode(&ProvValue::from("ab")),
            vec![0x01, 0, 0, 0, 2, b'a', b'b']
        );
    }

    #[test]
    fn map_entries_sorted() {
        let mut m = BTreeMap::new();
        m.insert("b".to_string(), ProvValue::Int(1));
        m.insert("a".to_string(), ProvValue::Int(2));
        let bytes = canonical_encode(&ProvValue::Map(m));
        let a = bytes
            .windows(5)
            .position(|w| w == [0, 0, 0, 1, b'a'])
            .unwrap();
        let b = bytes
            .windows(5)
            .position(|w| w == [0, 0, 0, 1, b'b'])
            .unwrap();
        assert!(a < b);
    }

    #[test]
    fn bool_hash_matches_independent_sha256() {
        // printf '\x04\x01' | sha256sum
        assert_eq!(
            provenance_hash(&ProvValue::Bool(true)),
            "38b8bc5c86db41a80615b2f4694fc754cccffb95e8933d5b376021feab83cea3"
        );
    }

    #[test]
    fn timestamps_do_not_affect_hash() {
        let a = ObjProv::new("M")
            .with_config("lr", 0.1)
            .with_instance(
                "trained-at",
                Timestamp {
                    seconds: 1,
                    nanos: 0,
                },
            )
            .with_instance("os-name", "linux");
        let b = ObjProv::new("M")
            .with_config("lr", 0.1)
            .with_instance(
                "trained-at",
                Timestamp {
                    seconds: 99,
                    nanos: 5,
                },
            )
            .with_instance("os-name", "macos");
        assert_eq!(
            provenance_hash(&a.clone().into()),
            provenance_hash(&b.into())
        );
        let c = a.with_config("lr", 0.2);
        assert_ne!(
            provenance_hash(&c.into()),
            provenance_hash(&ObjProv::new("M").with_config("lr", 0.1).into())
        );
    }

    proptest! {
        #[test]
        fn encoding_is_injective(a in super::super::testing::tree(), b in super::super::testing::tree()) {
            prop_assert_eq!(a == b, canonical_encode(&a) == canonical_encode(&b));
        }

        #[test]
        fn encoding_is_deterministic(a in super::super::testing::tree()) {
            prop_assert_eq!(canonical_encode(&a), canonical_encode(&a.clone()));
        }
    }
}
