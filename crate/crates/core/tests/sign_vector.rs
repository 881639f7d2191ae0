//! Fixed-randomness signing vector cross-checked against an independent
//! implementation (see `tests/oracle/bbs_sign_vector.py`).

use iuguard_core::crypto::bbs::{keygen, sign_fixed, verify_signature};
use iuguard_core::crypto::codec::g1_to_bytes;
use iuguard_core::crypto::Scalar;

const PK: &str = "a8a673682f43e3f1bccd8442e6acdb38516dac54e2bf098151d84cb908bfce34e63614b880d861203aa78f38193b65760e91013cd7d8d72ce417d49e2538390df58a12b1f98dcee213026dc4b7adfd1f85a1dc9d7b5628a19c43378452892003";
const GENS: [&str; 5] = [
    "95ee7e5eff21a2e07f0acf6756d59135cc14dc6a7db082d3d8233c78b5f06fb70cb47a4b114f877fe4cce9556ae073be",
    "815187d7cbd5964eb5b0b3adecd617b450dbca3138fd97885365c6d5d067d5478fb05a1c8a92e6fec5d06c348198b584",
    "999163be088238e5dae2c7d8dc715b4df7d1213fd5072f49ac33ffc2b4d3a69be486e894b9fba3ded2116129194d9f16",
    "8bfc6663fddf25a5eafbb1b968eb26f328d77ff8b0c183cb4198d40646b9ce9c8c4b872964047aa5327333099750c9b8",
    "8f3ae3b5589825c1c4620e1bae43b2ba24d12c85b51f2c94a8d135eb484bb8bbf006af2b3985b6e676e2ad343d7c50b2",
];
const A: &str = "94b07ab37285243cf3ad899733950075c8e404359559d14180c636a6946581d11099130e6e430e81aed90e08007a55a4";

#[test]
fn signature_matches_reference_implementation() {
    let kp = keygen(&[0x11; 32], 4).unwrap();
    let pk = kp.public_key();
    assert_eq!(hex::encode(pk.w().to_compressed()), PK);
    let gens: Vec<String> = pk
        .generators()
        .iter()
        .map(|g| hex::encode(g1_to_bytes(g)))
        .collect();
    assert_eq!(gens, GENS);

    let messages: Vec<Scalar> = [5u64, 3_550_000, 3_700_000, 0xdead_beef]
        .map(Scalar::from)
        .to_vec();
    let e = Scalar::from(12_345_678_901u64);
    let s = Scalar::from(98_765_432u64);
    let sig = sign_fixed(&kp, &messages, e, s).unwrap();
    assert_eq!(hex::encode(g1_to_bytes(&sig.a)), A);
    assert_eq!(sig.e, e);
    assert_eq!(sig.s, s);
    assert!(verify_signature(pk, &messages, &sig));
}
