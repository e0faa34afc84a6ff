#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // The label parser must never panic, and any label it accepts must
        // round-trip through its canonical form.
        if let Ok(scenario) = text.parse::<cdasim::Scenario>() {
            let reparsed: cdasim::Scenario = scenario.label().parse().unwrap();
            assert_eq!(reparsed, scenario);
        }
    }
});
