//! Placements of atoms on a finite lattice.

/// All `C(total_sites, atoms)` occupied-site lists in lexicographic order.
pub fn enumerate_gap_configs(total_sites: usize, atoms: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    if atoms > total_sites {
        return out;
    }
    let mut current: Vec<i64> = (0..atoms as i64).collect();
    loop {
        out.push(current.clone());
        // rightmost position that can still advance
        let mut k = atoms;
        while k > 0 && current[k - 1] == (total_sites - atoms + k - 1) as i64 {
            k -= 1;
        }
        if k == 0 {
            return out;
        }
        current[k - 1] += 1;
        for j in k..atoms {
            current[j] = current[j - 1] + 1;
        }
    }
}

/// Both end sites occupied and the empty sites form one contiguous run.
/// Configurations with empty end sites are shorter full chains and excluded.
pub fn is_single_gap(sites: &[i64], total_sites: usize) -> bool {
    if sites.first() != Some(&0) || sites.last() != Some(&(total_sites as i64 - 1)) {
        return false;
    }
    sites.windows(2).filter(|w| w[1] - w[0] > 1).count() == 1
}

pub fn is_full(sites: &[i64]) -> bool {
    sites.windows(2).all(|w| w[1] - w[0] == 1)
}

pub fn single_gap_configs(total_sites: usize, atoms: usize) -> Vec<Vec<i64>> {
    enumerate_gap_configs(total_sites, atoms)
        .into_iter()
        .filter(|c| is_single_gap(c, total_sites))
        .collect()
}

/// `"0;2;3"` label used in CSV output.
pub fn label(sites: &[i64]) -> String {
    sites.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";")
}
