#![no_main]

use libfuzzer_sys::fuzz_target;
use pampere::dump::{decode_dump, encode_dump};

fuzz_target!(|data: &[u8]| {
    if let Ok((header, values)) = decode_dump(data) {
        let bytes = encode_dump(&header, &values).expect("decoded dump re-encodes");
        let (again, round) = decode_dump(&bytes).expect("re-encoded dump decodes");
        assert_eq!(again, header);
        assert_eq!(round.len(), values.len());
        assert!(round.iter().zip(&values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
});
