#![no_main]

use crashcast::io::{decode_field, field_to_bytes};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(field) = decode_field(data) {
        let again = decode_field(&field_to_bytes(&field)).expect("encoded field decodes");
        assert_eq!(again, field);
    }
});
