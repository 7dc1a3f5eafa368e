#![no_main]

use libfuzzer_sys::fuzz_target;
use scoreline::data::{ingest_reader, IngestOptions, LeagueDataset};

fuzz_target!(|data: &[u8]| {
    let Ok(ds) = ingest_reader(data, &IngestOptions::default()) else {
        return;
    };
    // whatever ingests must survive the canonical round trip
    let mut buf = Vec::new();
    ds.write_canonical(&mut buf).expect("write");
    let back = LeagueDataset::read_canonical(buf.as_slice()).expect("reread");
    assert_eq!(back, ds);
});
