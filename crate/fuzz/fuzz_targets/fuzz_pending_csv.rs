#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // The sample reader must handle arbitrary bytes without panicking.
    let _ = cdasim::csvio::parse_pending_csv(data);
});
