#![no_main]

use libfuzzer_sys::fuzz_target;
use scoreline::data::{detect_date_format, parse_date, DateFormat};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let lines: Vec<&str> = text.lines().collect();
    let _ = detect_date_format(lines.iter().copied());
    for format in [DateFormat::DayFirst, DateFormat::MonthFirst, DateFormat::Iso] {
        for l in &lines {
            let _ = parse_date(l, format);
        }
    }
});
