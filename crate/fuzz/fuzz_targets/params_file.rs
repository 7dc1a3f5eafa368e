#![no_main]

use libfuzzer_sys::fuzz_target;
use scoreline::params::ParamFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(pf) = ParamFile::parse(text) else {
        return;
    };
    let mut buf = Vec::new();
    pf.write(&mut buf).expect("write");
    let back = ParamFile::parse(std::str::from_utf8(&buf).expect("utf8")).expect("reparse");
    assert_eq!(back, pf);
});
