#![no_main]

use libfuzzer_sys::fuzz_target;
use scoreline::evaluation::BacktestLedger;

fuzz_target!(|data: &[u8]| {
    let _ = BacktestLedger::read_csv(data);
});
