#![no_main]

use cdma_paging::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::from_str_any(text) {
        // Anything accepted must yield a usable system.
        let system = cfg.system();
        assert_eq!(system.carrier_count(), cfg.populations.len());
        assert_eq!(system.total_channels(), cfg.total_channels());
        assert!(cfg.warmup() < cfg.horizon);
    }
});
