//! Radius grid specifications: `log:LO:HI:COUNT`, `lin:LO:HI:COUNT`, or a
//! comma-separated list.

pub fn parse(spec: &str) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    let grid = if let Some(rest) = spec.strip_prefix("log:") {
        let (lo, hi, count) = range(rest)?;
        if lo <= 0.0 {
            return Err("log grid needs a positive lower end".into());
        }
        let mut g: Vec<f64> = spaced(lo.ln(), hi.ln(), count).into_iter().map(f64::exp).collect();
        g[0] = lo;
        g[count - 1] = hi;
        g
    } else if let Some(rest) = spec.strip_prefix("lin:") {
        let (lo, hi, count) = range(rest)?;
        spaced(lo, hi, count)
    } else {
        spec.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<f64>().map_err(|e| format!("bad r value {s:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?
    };
    if grid.is_empty() {
        return Err("r grid is empty".into());
    }
    Ok(grid)
}

fn range(rest: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = rest.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err(format!("expected LO:HI:COUNT, got {rest:?}"));
    };
    let lo: f64 = lo.parse().map_err(|e| format!("bad lower end {lo:?}: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("bad upper end {hi:?}: {e}"))?;
    let count: usize = count.parse().map_err(|e| format!("bad count {count:?}: {e}"))?;
    if !lo.is_finite() || !hi.is_finite() || lo >= hi || count < 2 {
        return Err("grid needs LO < HI and COUNT >= 2".into());
    }
    Ok((lo, hi, count))
}

fn spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| if k + 1 == count { hi } else { lo + (hi - lo) * k as f64 / (count - 1) as f64 })
        .collect()
}
