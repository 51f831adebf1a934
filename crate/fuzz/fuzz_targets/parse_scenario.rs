#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = vdtp_cli::parse_scenario(text) {
            let _ = spec.trial_count();
            let _ = spec.fingerprint();
        }
    }
});
