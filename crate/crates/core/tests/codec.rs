mod common;

use common::gen;
use oran_core::e2ap::{decode, encode, render_debug, CodecError};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn roundtrip(pdu in gen::pdu()) {
        let bytes = encode(&pdu).unwrap();
        prop_assert_eq!(decode(&bytes).unwrap(), pdu);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn strict_prefixes_never_decode(pdu in gen::pdu()) {
        let bytes = encode(&pdu).unwrap();
        for cut in 0..bytes.len() {
            prop_assert!(matches!(decode(&bytes[..cut]), Err(CodecError::MalformedFrame(_))));
        }
    }

    #[test]
    fn rendering_names_the_procedure(pdu in gen::pdu()) {
        let text = render_debug(&pdu);
        let want = format!("procedureCode: {}", pdu.procedure_code);
        prop_assert!(text.lines().any(|l| l.trim() == want));
    }

    #[test]
    fn arbitrary_bytes_do_not_panic(data in proptest::collection::vec(any::<u8>(), 0..64)) {
        let _ = decode(&data);
    }
}

#[test]
fn reference_subscription_fields() {
    let pdu = gen::reference_subscription();
    let text = render_debug(&decode(&encode(&pdu).unwrap()).unwrap());
    assert_eq!(gen::missing_lines(&text, gen::REFERENCE_SUBSCRIPTION_LINES), Vec::<String>::new(), "{text}");
}

#[test]
fn reference_indication_fields() {
    let pdu = gen::reference_indication();
    let text = render_debug(&decode(&encode(&pdu).unwrap()).unwrap());
    assert_eq!(gen::missing_lines(&text, gen::REFERENCE_INDICATION_LINES), Vec::<String>::new(), "{text}");
}
