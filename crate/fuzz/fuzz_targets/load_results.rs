#![no_main]
use libfuzzer_sys::fuzz_target;
use vdtp_bench::persist::parse_metadata;
use vdtp_bench::{parse_results, results_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_metadata(text);
    }
    // whatever loads must survive a write and reload unchanged
    if let Ok(trials) = parse_results(data) {
        let again = parse_results(&results_csv(&trials)[..]).expect("written results reload");
        assert_eq!(again, trials);
    }
});
