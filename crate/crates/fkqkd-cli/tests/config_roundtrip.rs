//! Property test: parsing the normalized dump of any valid config
//! reproduces the config exactly.
//!
//! The config parser lives in the binary crate; this test drives it through
//! the CLI itself (--echo-config), which also pins the dump format.

use proptest::prelude::*;
use std::io::Write;
use std::process::Command;

fn echo_config(text: &str) -> (Option<i32>, String) {
    let path = std::env::temp_dir().join(format!(
        "fkqkd_prop_{}.cfg",
        std::process::id().wrapping_mul(31).wrapping_add(text.len() as u32)
    ));
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(text.as_bytes()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fkqkd"))
        .args(["--config", path.to_str().unwrap(), "--echo-config", "delta"])
        .output()
        .unwrap();
    let dump = String::from_utf8_lossy(&out.stderr)
        .lines()
        .filter(|l| l.contains('='))
        .collect::<Vec<_>>()
        .join("\n");
    (out.status.code(), dump)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn parse_dump_parse_is_identity(
        eta in 0.05f64..0.9,
        p_dark in 1e-10f64..1e-4,
        tol in 0.0f64..0.1,
        e_mis in 0.0f64..0.4,
        p_za in 0.05f64..0.95,
        f_ec in 1.0f64..2.0,
        eps in 1e-12f64..1e-2,
        seed in 0u64..1_000_000,
    ) {
        let text = format!(
            "eta_det={eta}\np_dark={p_dark}\ntol_eta={tol}\ntol_dc={tol}\n\
             e_mis={e_mis}\np_za={p_za}\nf_ec={f_ec}\neps_sec={eps}\nmc_seed={seed}\n"
        );
        let (code, dump1) = echo_config(&text);
        prop_assert_eq!(code, Some(0), "config rejected: {}", text);
        let (code2, dump2) = echo_config(&dump1);
        prop_assert_eq!(code2, Some(0));
        prop_assert_eq!(dump1, dump2);
    }
}
