//! A full sweep driven by the experiment layer, as the CLI does it.

use onebit_bernstein::experiment::{cmd_rates, load_config};

fn main() -> onebit_bernstein::Result<()> {
    let flags = [
        ("fn", "sin".to_string()),
        ("params", "0.8,1".to_string()),
        ("n", "32,64,128,256,512,1024".to_string()),
        ("order", "2".to_string()),
        ("rule", "stable".to_string()),
    ];
    let config = load_config(None, &flags)?;
    let out = cmd_rates(&config)?;
    for row in &out.rows {
        println!("n = {:5}  sup[0.2,0.8] = {:.4e}  max|u| = {:.3}", row.n, row.sup_interval, row.u_max.unwrap_or(0.0));
    }
    for col in ["sup_interval", "l1", "l2"] {
        if let Some(s) = out.slope(col) {
            println!("slope {col}: {s:.3}");
        }
    }
    Ok(())
}
