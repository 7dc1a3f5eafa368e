#![no_main]

use libfuzzer_sys::fuzz_target;
use scoreline::data::LeagueDataset;

fuzz_target!(|data: &[u8]| {
    let Ok(ds) = LeagueDataset::read_canonical(data) else {
        return;
    };
    let mut buf = Vec::new();
    ds.write_canonical(&mut buf).expect("write");
    let back = LeagueDataset::read_canonical(buf.as_slice()).expect("reread");
    assert_eq!(back, ds);
});
