#![no_main]

use libfuzzer_sys::fuzz_target;
use sbary_cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = RunConfig::from_json(text) else {
        return;
    };
    // whatever parses must serialize back to an equal config
    let again = RunConfig::from_json(&serde_json::to_string(&config).unwrap()).unwrap();
    assert_eq!(again, config);
    let _ = config.validate();
});
