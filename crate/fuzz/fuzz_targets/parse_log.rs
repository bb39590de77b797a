#![no_main]

use crashcast::io::{log_to_string, parse_log};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(log) = parse_log(text) {
        let again = parse_log(&log_to_string(&log)).expect("written log parses");
        assert_eq!(again, log);
    }
});
