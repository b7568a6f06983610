//! Porter stemmer.
//!
//! Implements the classic suffix-stripping algorithm over ASCII words.
//! Within each step the longest matching suffix is selected first; if its
//! condition fails, no other rule of that step is tried. Tokens shorter
//! than three letters, or containing anything besides ASCII letters, pass
//! through unchanged.

/// Stems a lowercase token. Tokens carrying the negation prefix keep the
/// prefix verbatim and have only the remainder stemmed.
pub fn stem(token: &str) -> String {
    if let Some(rest) = token.strip_prefix("not_") {
        return format!("not_{}", stem_word(rest));
    }
    stem_word(token)
}

fn stem_word(token: &str) -> String {
    if token.len() <= 2 || !token.bytes().all(|b| b.is_ascii_lowercase()) {
        return token.to_string();
    }
    let mut w = Word {
        b: token.as_bytes().to_vec(),
    };
    w.step1a();
    w.step1b();
    w.step1c();
    w.step2();
    w.step3();
    w.step4();
    w.step5a();
    w.step5b();
    String::from_utf8(w.b).expect("ascii")
}

struct Word {
    b: Vec<u8>,
}

impl Word {
    fn is_consonant(&self, i: usize) -> bool {
        match self.b[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !self.is_consonant(i - 1),
            _ => true,
        }
    }

    /// The measure m of the first `len` letters: the number of VC blocks in
    /// the pattern [C](VC)^m[V].
    fn measure(&self, len: usize) -> usize {
        let mut m = 0;
        let mut prev_vowel = false;
        for i in 0..len {
            let cons = self.is_consonant(i);
            if cons && prev_vowel {
                m += 1;
            }
            prev_vowel = !cons;
        }
        m
    }

    fn has_vowel(&self, len: usize) -> bool {
        (0..len).any(|i| !self.is_consonant(i))
    }

    /// *d — the first `len` letters end with a double consonant.
    fn ends_double_consonant(&self, len: usize) -> bool {
        len >= 2 && self.b[len - 1] == self.b[len - 2] && self.is_consonant(len - 1)
    }

    /// *o — the first `len` letters end consonant-vowel-consonant where the
    /// final consonant is not w, x or y.
    fn ends_cvc(&self, len: usize) -> bool {
        len >= 3
            && self.is_consonant(len - 3)
            && !self.is_consonant(len - 2)
            && self.is_consonant(len - 1)
            && !matches!(self.b[len - 1], b'w' | b'x' | b'y')
    }

    fn ends_with(&self, suffix: &[u8]) -> bool {
        self.b.len() >= suffix.len() && self.b.ends_with(suffix)
    }

    fn stem_len(&self, suffix: &[u8]) -> usize {
        self.b.len() - suffix.len()
    }

    fn truncate(&mut self, len: usize) {
        self.b.truncate(len);
    }

    fn replace(&mut self, suffix_len: usize, with: &[u8]) {
        let keep = self.b.len() - suffix_len;
        self.b.truncate(keep);
        self.b.extend_from_slice(with);
    }

    /// Applies the first rule whose suffix matches, provided the measure of
    /// the remaining stem exceeds `min_m`. Rules are listed longest first.
    /// Returns true when a suffix matched (whether or not it was replaced).
    fn apply_rules(&mut self, rules: &[(&[u8], &[u8])], min_m: usize) -> bool {
        for &(suffix, with) in rules {
            if self.ends_with(suffix) {
                let stem = self.stem_len(suffix);
                if self.measure(stem) > min_m {
                    self.replace(suffix.len(), with);
                }
                return true;
            }
        }
        false
    }

    fn step1a(&mut self) {
        if self.ends_with(b"sses") {
            self.replace(4, b"ss");
        } else if self.ends_with(b"ies") {
            self.replace(3, b"i");
        } else if self.ends_with(b"ss") {
            // unchanged
        } else if self.ends_with(b"s") {
            self.truncate(self.b.len() - 1);
        }
    }

    fn step1b(&mut self) {
        if self.ends_with(b"eed") {
            let stem = self.stem_len(b"eed");
            if self.measure(stem) > 0 {
                self.truncate(self.b.len() - 1);
            }
            return;
        }
        let removed = if self.ends_with(b"ed") && self.has_vowel(self.stem_len(b"ed")) {
            self.truncate(self.b.len() - 2);
            true
        } else if self.ends_with(b"ing") && self.has_vowel(self.stem_len(b"ing")) {
            self.truncate(self.b.len() - 3);
            true
        } else {
            false
        };
        if !removed {
            return;
        }
        if self.ends_with(b"at") || self.ends_with(b"bl") || self.ends_with(b"iz") {
            self.b.push(b'e');
        } else if self.ends_double_consonant(self.b.len())
            && !matches!(self.b[self.b.len() - 1], b'l' | b's' | b'z')
        {
            self.truncate(self.b.len() - 1);
        } else if self.measure(self.b.len()) == 1 && self.ends_cvc(self.b.len()) {
            self.b.push(b'e');
        }
    }

    fn step1c(&mut self) {
        if self.ends_with(b"y") && self.has_vowel(self.b.len() - 1) {
            let last = self.b.len() - 1;
            self.b[last] = b'i';
        }
    }

    fn step2(&mut self) {
        const RULES: &[(&[u8], &[u8])] = &[
            (b"ization", b"ize"),
            (b"iveness", b"ive"),
            (b"fulness", b"ful"),
            (b"ousness", b"ous"),
            (b"ational", b"ate"),
            (b"tional", b"tion"),
            (b"biliti", b"ble"),
            (b"alism", b"al"),
            (b"ation", b"ate"),
            (b"entli", b"ent"),
            (b"ousli", b"ous"),
            (b"aliti", b"al"),
            (b"iviti", b"ive"),
            (b"enci", b"ence"),
            (b"anci", b"ance"),
            (b"izer", b"ize"),
            (b"abli", b"able"),
            (b"alli", b"al"),
            (b"ator", b"ate"),
            (b"eli", b"e"),
        ];
        self.apply_rules(RULES, 0);
    }

    fn step3(&mut self) {
        const RULES: &[(&[u8], &[u8])] = &[
            (b"icate", b"ic"),
            (b"ative", b""),
            (b"alize", b"al"),
            (b"iciti", b"ic"),
            (b"ical", b"ic"),
            (b"ful", b""),
            (b"ness", b""),
        ];
        self.apply_rules(RULES, 0);
    }

    fn step4(&mut self) {
        const RULES: &[(&[u8], &[u8])] = &[
            (b"ement", b""),
            (b"ance", b""),
            (b"ence", b""),
            (b"able", b""),
            (b"ible", b""),
            (b"ment", b""),
            (b"ant", b""),
            (b"ent", b""),
            (b"ism", b""),
            (b"ate", b""),
            (b"iti", b""),
            (b"ous", b""),
            (b"ive", b""),
            (b"ize", b""),
            (b"ion", b""),
            (b"al", b""),
            (b"er", b""),
            (b"ic", b""),
            (b"ou", b""),
        ];
        for &(suffix, _) in RULES {
            if self.ends_with(suffix) {
                let stem = self.stem_len(suffix);
                let applies = if suffix == b"ion" {
                    self.measure(stem) > 1 && stem >= 1 && matches!(self.b[stem - 1], b's' | b't')
                } else {
                    self.measure(stem) > 1
                };
                if applies {
                    self.truncate(stem);
                }
                return;
            }
        }
    }

    fn step5a(&mut self) {
        if self.ends_with(b"e") {
            let stem = self.b.len() - 1;
            let m = self.measure(stem);
            if m > 1 || (m == 1 && !self.ends_cvc(stem)) {
                self.truncate(stem);
            }
        }
    }

    fn step5b(&mut self) {
        let len = self.b.len();
        if self.measure(len) > 1 && self.ends_double_consonant(len) && self.b[len - 1] == b'l' {
            self.truncate(len - 1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(pairs: &[(&str, &str)]) {
        for &(input, expected) in pairs {
            assert_eq!(stem(input), expected, "stem({input:?})");
        }
    }

    #[test]
    fn plurals_and_participles() {
        check(&[
            ("caresses", "caress"),
            ("ponies", "poni"),
            ("ties", "ti"),
            ("caress", "caress"),
            ("cats", "cat"),
            ("feed", "feed"),
            ("agreed", "agre"),
            ("plastered", "plaster"),
            ("bled", "bled"),
            ("motoring", "motor"),
            ("sing", "sing"),
            ("conflated", "conflat"),
            ("troubled", "troubl"),
            ("sized", "size"),
            ("hopping", "hop"),
            ("tanned", "tan"),
            ("falling", "fall"),
            ("hissing", "hiss"),
            ("fizzed", "fizz"),
            ("failing", "fail"),
            ("filing", "file"),
        ]);
    }

    #[test]
    fn y_to_i() {
        check(&[("happy", "happi"), ("sky", "sky")]);
    }

    #[test]
    fn derivational_suffixes() {
        check(&[
            ("relational", "relat"),
            ("conditional", "condit"),
            ("rational", "ration"),
            ("digitizer", "digit"),
            ("radically", "radic"),
            ("differently", "differ"),
            ("vileli", "vile"),
            ("analogousli", "analog"),
            ("operator", "oper"),
            ("feudalism", "feudal"),
            ("decisiveness", "decis"),
            ("hopefulness", "hope"),
            ("callousness", "callous"),
            ("formality", "formal"),
            ("sensitivity", "sensit"),
            ("triplicate", "triplic"),
            ("formative", "form"),
            ("formalize", "formal"),
            ("electrical", "electr"),
            ("hopeful", "hope"),
            ("goodness", "good"),
        ]);
    }

    #[test]
    fn endings() {
        check(&[
            ("revival", "reviv"),
            ("allowance", "allow"),
            ("inference", "infer"),
            ("airliner", "airlin"),
            ("gyroscopic", "gyroscop"),
            ("adjustable", "adjust"),
            ("defensible", "defens"),
            ("irritant", "irrit"),
            ("replacement", "replac"),
            ("adjustment", "adjust"),
            ("dependent", "depend"),
            ("adoption", "adopt"),
            ("communism", "commun"),
            ("activate", "activ"),
            ("effective", "effect"),
            ("probate", "probat"),
            ("rate", "rate"),
            ("cease", "ceas"),
            ("controlling", "control"),
            ("rolled", "roll"),
        ]);
    }

    #[test]
    fn review_vocabulary() {
        check(&[
            ("batteries", "batteri"),
            ("shipped", "ship"),
            ("shipping", "ship"),
            ("working", "work"),
            ("works", "work"),
            ("loved", "love"),
            ("returned", "return"),
            ("excellent", "excel"),
        ]);
    }

    #[test]
    fn negation_prefix_preserved() {
        assert_eq!(stem("not_working"), "not_work");
        assert_eq!(stem("not_like"), "not_like");
        assert_eq!(stem("not_"), "not_");
    }

    #[test]
    fn short_and_non_alpha_tokens_unchanged() {
        assert_eq!(stem("go"), "go");
        assert_eq!(stem("tv"), "tv");
        assert_eq!(stem("mp3"), "mp3");
        assert_eq!(stem("foo_bar"), "foo_bar");
        assert_eq!(stem(""), "");
    }
}
