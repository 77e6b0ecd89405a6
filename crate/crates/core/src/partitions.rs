//! Set partitions of `N` labelled elements into exactly `Q` blocks, as
//! restricted-growth strings: `a_0 = 0` and `a_i <= 1 + max(a_0..a_{i-1})`.
//! Strings are produced in lexicographic order, each partition once.

/// Stirling number of the second kind by `S(n,q) = q S(n-1,q) + S(n-1,q-1)`.
/// Saturates at `u128::MAX`.
pub fn stirling2(n: usize, q: usize) -> u128 {
    if q > n {
        return 0;
    }
    let mut row = vec![0u128; q + 1];
    row[0] = 1; // S(0, 0)
    for i in 1..=n {
        for k in (1..=q.min(i)).rev() {
            row[k] = (k as u128)
                .saturating_mul(row[k])
                .saturating_add(row[k - 1]);
        }
        row[0] = 0;
    }
    row[q]
}

/// Calls `f` on every restricted-growth string of length `n` with exactly
/// `q` blocks that starts with `prefix`.
pub fn for_each_completion<F: FnMut(&[usize])>(prefix: &[usize], n: usize, q: usize, mut f: F) {
    if q == 0 || q > n || prefix.len() > n {
        return;
    }
    let mut labels = vec![0usize; n];
    let mut blocks = 0;
    for (i, &c) in prefix.iter().enumerate() {
        if c > blocks || c >= q {
            return;
        }
        labels[i] = c;
        if c == blocks {
            blocks += 1;
        }
    }
    if blocks + (n - prefix.len()) < q {
        return;
    }
    recurse(&mut labels, prefix.len(), blocks, q, &mut f);
}

fn recurse<F: FnMut(&[usize])>(
    labels: &mut [usize],
    pos: usize,
    blocks: usize,
    q: usize,
    f: &mut F,
) {
    let n = labels.len();
    if pos == n {
        if blocks == q {
            f(labels);
        }
        return;
    }
    let remaining_after = n - pos - 1;
    // Reuse an existing block only if the rest can still open the missing ones.
    if blocks + remaining_after >= q {
        for c in 0..blocks {
            labels[pos] = c;
            recurse(labels, pos + 1, blocks, q, f);
        }
    }
    if blocks < q {
        labels[pos] = blocks;
        recurse(labels, pos + 1, blocks + 1, q, f);
    }
}

pub fn for_each_partition<F: FnMut(&[usize])>(n: usize, q: usize, f: F) {
    for_each_completion(&[], n, q, f)
}

/// Counts partitions by walking the enumeration.
pub fn count_partitions(n: usize, q: usize) -> u64 {
    let mut count = 0u64;
    for_each_partition(n, q, |_| count += 1);
    count
}

/// Feasible prefixes of length `min(depth, n)`, in lexicographic order.
/// Their completions partition the full enumeration.
pub fn shard_prefixes(n: usize, q: usize, depth: usize) -> Vec<Vec<usize>> {
    let depth = depth.min(n);
    let mut out = Vec::new();
    if q == 0 || q > n {
        return out;
    }
    let mut prefix = vec![0usize; depth];
    fn walk(
        prefix: &mut [usize],
        pos: usize,
        blocks: usize,
        n: usize,
        q: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        if blocks > q || blocks + (n - pos) < q {
            return;
        }
        if pos == prefix.len() {
            out.push(prefix.to_vec());
            return;
        }
        for c in 0..=blocks {
            prefix[pos] = c;
            let b = if c == blocks { blocks + 1 } else { blocks };
            walk(prefix, pos + 1, b, n, q, out);
        }
    }
    if depth == 0 {
        out.push(Vec::new());
    } else {
        prefix[0] = 0;
        walk(&mut prefix, 1, 1, n, q, &mut out);
    }
    out
}
