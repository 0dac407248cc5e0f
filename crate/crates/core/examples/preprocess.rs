//! Raw behavior log to processed dataset files. Reads the log given as the
//! first argument, or writes and reads a small synthetic one.

use std::path::PathBuf;

use vlogrec::data::{self, raw, synthetic, PositiveRuleConfig, SyntheticConfig};

fn main() -> vlogrec::Result<()> {
    let dir = std::env::temp_dir().join("vlogrec_preprocess");
    let raw_path = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let cfg = SyntheticConfig {
                n_users: 80,
                n_vloggers: 8,
                noise: 0.3,
                seed: 7,
                ..Default::default()
            };
            let path = dir.join("raw.tsv");
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(
                &path,
                raw::format_raw_log(&synthetic::synthetic_records(&cfg)?),
            )
            .unwrap();
            path
        }
    };
    let records = data::read_raw_log(&raw_path)?;
    for (name, rules) in [
        ("wechat", PositiveRuleConfig::wechat()),
        ("takatak", PositiveRuleConfig::takatak()),
    ] {
        let ds = data::build_dataset(&records, &rules)?;
        let out = dir.join(name);
        ds.write(&out)?;
        println!(
            "{name}: {} records -> {:?}, {} interactions, {} follows, written to {}",
            records.len(),
            ds.counts(),
            ds.interactions.len(),
            ds.user_vlogger.len(),
            out.display()
        );
    }
    Ok(())
}
