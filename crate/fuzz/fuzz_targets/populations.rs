#![no_main]

use cdma_paging::config::parse_populations;
use cdma_paging::search::location_distribution;
use cdma_paging::CarrierSystem;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(pops) = parse_populations(text) {
        if let Ok(system) = CarrierSystem::from_populations(&pops) {
            let dist = location_distribution(&system).expect("valid system has a distribution");
            let sum: f64 = dist.probs().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }
});
