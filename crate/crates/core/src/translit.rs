//! Buckwalter transliteration.
//!
//! One Arabic sign maps to exactly one printable ASCII character and back,
//! so both directions preserve length in code points. Characters outside
//! the table pass through untouched and set the `out_of_alphabet` flag.

/// (Arabic, Buckwalter) pairs: hamza and alef forms, the 36 letters,
/// tatweel, tanween and short vowels, shadda, sukun, dagger alef, wasla.
const PAIRS: &[(char, char)] = &[
    ('\u{0621}', '\''),
    ('\u{0622}', '|'),
    ('\u{0623}', '>'),
    ('\u{0624}', '&'),
    ('\u{0625}', '<'),
    ('\u{0626}', '}'),
    ('\u{0627}', 'A'),
    ('\u{0628}', 'b'),
    ('\u{0629}', 'p'),
    ('\u{062A}', 't'),
    ('\u{062B}', 'v'),
    ('\u{062C}', 'j'),
    ('\u{062D}', 'H'),
    ('\u{062E}', 'x'),
    ('\u{062F}', 'd'),
    ('\u{0630}', '*'),
    ('\u{0631}', 'r'),
    ('\u{0632}', 'z'),
    ('\u{0633}', 's'),
    ('\u{0634}', '$'),
    ('\u{0635}', 'S'),
    ('\u{0636}', 'D'),
    ('\u{0637}', 'T'),
    ('\u{0638}', 'Z'),
    ('\u{0639}', 'E'),
    ('\u{063A}', 'g'),
    ('\u{0640}', '_'),
    ('\u{0641}', 'f'),
    ('\u{0642}', 'q'),
    ('\u{0643}', 'k'),
    ('\u{0644}', 'l'),
    ('\u{0645}', 'm'),
    ('\u{0646}', 'n'),
    ('\u{0647}', 'h'),
    ('\u{0648}', 'w'),
    ('\u{0649}', 'Y'),
    ('\u{064A}', 'y'),
    ('\u{064B}', 'F'),
    ('\u{064C}', 'N'),
    ('\u{064D}', 'K'),
    ('\u{064E}', 'a'),
    ('\u{064F}', 'u'),
    ('\u{0650}', 'i'),
    ('\u{0651}', '~'),
    ('\u{0652}', 'o'),
    ('\u{0670}', '`'),
    ('\u{0671}', '{'),
];

/// Output of either direction of the codec.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transliteration {
    pub text: String,
    /// Set when at least one character had no table entry.
    pub out_of_alphabet: bool,
}

/// The bijective Arabic/Buckwalter table.
#[derive(Debug, Clone, Copy, Default)]
pub struct TranslitTable;

impl TranslitTable {
    pub fn pairs(&self) -> &'static [(char, char)] {
        PAIRS
    }

    pub fn arabic_to_ascii(&self, c: char) -> Option<char> {
        PAIRS.iter().find(|(ar, _)| *ar == c).map(|(_, bw)| *bw)
    }

    pub fn ascii_to_arabic(&self, c: char) -> Option<char> {
        PAIRS.iter().find(|(_, bw)| *bw == c).map(|(ar, _)| *ar)
    }

    /// Arabic signs covered by the table, in table order.
    pub fn arabic_alphabet(&self) -> impl Iterator<Item = char> {
        PAIRS.iter().map(|(ar, _)| *ar)
    }

    pub fn ascii_alphabet(&self) -> impl Iterator<Item = char> {
        PAIRS.iter().map(|(_, bw)| *bw)
    }
}

pub fn to_buckwalter(arabic: &str) -> Transliteration {
    let table = TranslitTable;
    let mut out_of_alphabet = false;
    let text = arabic
        .chars()
        .map(|c| match table.arabic_to_ascii(c) {
            Some(bw) => bw,
            None => {
                if !c.is_ascii() && !c.is_whitespace() {
                    out_of_alphabet = true;
                }
                c
            }
        })
        .collect();
    Transliteration {
        text,
        out_of_alphabet,
    }
}

pub fn from_buckwalter(ascii: &str) -> Transliteration {
    let table = TranslitTable;
    let mut out_of_alphabet = false;
    let text = ascii
        .chars()
        .map(|c| match table.ascii_to_arabic(c) {
            Some(ar) => ar,
            None => {
                if !c.is_whitespace() {
                    out_of_alphabet = true;
                }
                c
            }
        })
        .collect();
    Transliteration {
        text,
        out_of_alphabet,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn table_is_a_bijection_onto_printable_ascii() {
        let arabic: HashSet<_> = TranslitTable.arabic_alphabet().collect();
        let ascii: HashSet<_> = TranslitTable.ascii_alphabet().collect();
        assert_eq!(arabic.len(), PAIRS.len());
        assert_eq!(ascii.len(), PAIRS.len());
        for c in ascii {
            assert!(c.is_ascii_graphic(), "{c:?}");
        }
    }

    #[test]
    fn greeting_golden() {
        let out = to_buckwalter("مساء الخير");
        assert_eq!(out.text, "msA' Alxyr");
        assert!(!out.out_of_alphabet);
        assert_eq!(from_buckwalter("msA' Alxyr").text, "مساء الخير");
    }

    #[test]
    fn self_introduction_golden() {
        assert_eq!(
            to_buckwalter("بنك مصر احمد مع حضرتك").text,
            "bnk mSr AHmd mE HDrtk"
        );
    }

    #[test]
    fn empty_string() {
        let out = to_buckwalter("");
        assert_eq!(out.text, "");
        assert!(!out.out_of_alphabet);
        assert_eq!(from_buckwalter("").text, "");
    }

    #[test]
    fn digits_pass_through_flagged() {
        let out = from_buckwalter("123");
        assert_eq!(out.text, "123");
        assert!(out.out_of_alphabet);
    }

    #[test]
    fn ascii_passes_unflagged_into_buckwalter() {
        let out = to_buckwalter("STC 2024 بنك");
        assert_eq!(out.text, "STC 2024 bnk");
        assert!(!out.out_of_alphabet);
    }

    #[test]
    fn foreign_script_is_flagged() {
        let out = to_buckwalter("بنك 🙂");
        assert_eq!(out.text, "bnk 🙂");
        assert!(out.out_of_alphabet);
        // Arabic comma is outside the table
        assert!(to_buckwalter("،").out_of_alphabet);
    }

    #[test]
    fn diacritics_are_kept() {
        let marked = "\u{0645}\u{064E}\u{0651}";
        let out = to_buckwalter(marked);
        assert_eq!(out.text, "ma~");
        assert_eq!(from_buckwalter("ma~").text, marked);
    }
}
