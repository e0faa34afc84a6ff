#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // Arbitrary config text must parse or error, never panic.
        let _ = cdasim_cli::config::parse_config(text);
    }
});
