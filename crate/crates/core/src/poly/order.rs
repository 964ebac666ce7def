use std::cmp::Ordering;

/// Monomial order given by a variable priority permutation.
///
/// `Lex(perm)` compares exponents of `perm[0]` first, then `perm[1]`, and so
/// on. `GrLex(perm)` compares total degree first and breaks ties the same way.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MonomialOrder {
    Lex(Vec<usize>),
    GrLex(Vec<usize>),
}

impl MonomialOrder {
    /// Lex with the variable list order as priority (`x > y > z`).
    pub fn lex(n: usize) -> Self {
        MonomialOrder::Lex((0..n).collect())
    }

    pub fn grlex(n: usize) -> Self {
        MonomialOrder::GrLex((0..n).collect())
    }

    pub fn cmp(&self, a: &[u32], b: &[u32]) -> Ordering {
        let perm = match self {
            MonomialOrder::Lex(p) => p,
            MonomialOrder::GrLex(p) => {
                let da: u32 = a.iter().sum();
                let db: u32 = b.iter().sum();
                if da != db {
                    return da.cmp(&db);
                }
                p
            }
        };
        for &i in perm {
            match a[i].cmp(&b[i]) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }

    /// Every lex order followed by every graded lex order on `n` variables.
    pub fn all(n: usize) -> Vec<MonomialOrder> {
        let perms = permutations(n);
        let lex = perms.iter().cloned().map(MonomialOrder::Lex);
        let grlex = perms.iter().cloned().map(MonomialOrder::GrLex);
        lex.chain(grlex).collect()
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for i in 0..n {
            if !prefix.contains(&i) {
                prefix.push(i);
                go(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), n, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lex_vs_grlex() {
        let lex = MonomialOrder::lex(3);
        let gr = MonomialOrder::grlex(3);
        assert_eq!(lex.cmp(&[2, 0, 0], &[0, 0, 4]), Ordering::Greater);
        assert_eq!(gr.cmp(&[2, 0, 0], &[0, 0, 4]), Ordering::Less);
        assert_eq!(MonomialOrder::all(3).len(), 12);
    }
}
