#![no_main]

use knnavg::experiment::RunResult;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(run) = RunResult::from_json(text) {
        let _ = run.write_history_csv(std::io::sink());
        let json = run.to_json().expect("parsed runs serialize");
        RunResult::from_json(&json).expect("serialized runs parse");
    }
});
