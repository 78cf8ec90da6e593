//! Lovins (1968) stemmer: longest-match removal over 294 endings, each guarded
//! by one of 29 context conditions, followed by undoubling and 34 recoding rules.

#[derive(Clone, Copy)]
enum Cond {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
    J,
    K,
    L,
    M,
    N,
    O,
    P,
    Q,
    R,
    S,
    T,
    U,
    V,
    W,
    X,
    Y,
    Z,
    AA,
    BB,
    CC,
}

use Cond::*;

#[rustfmt::skip]
static ENDINGS: &[(&str, Cond)] = &[
    ("alistically", B), ("arizability", A), ("izationally", B),

    ("antialness", A), ("arisations", A), ("arizations", A), ("entialness", A),

    ("allically", C), ("antaneous", A), ("antiality", A), ("arisation", A),
    ("arization", A), ("ationally", B), ("ativeness", A), ("eableness", E),
    ("entations", A), ("entiality", A), ("entialize", A), ("entiation", A),
    ("ionalness", A), ("istically", A), ("itousness", A), ("izability", A),
    ("izational", A),

    ("ableness", A), ("arizable", A), ("entation", A), ("entially", A),
    ("eousness", A), ("ibleness", A), ("icalness", A), ("ionalism", A),
    ("ionality", A), ("ionalize", A), ("iousness", A), ("izations", A),
    ("lessness", A),

    ("ability", A), ("aically", A), ("alistic", B), ("alities", A),
    ("ariness", E), ("aristic", A), ("arizing", A), ("ateness", A),
    ("atingly", A), ("ational", B), ("atively", A), ("ativism", A),
    ("elihood", E), ("encible", A), ("entally", A), ("entials", A),
    ("entiate", A), ("entness", A), ("fulness", A), ("ibility", A),
    ("icalism", A), ("icalist", A), ("icality", A), ("icalize", A),
    ("ication", G), ("icianry", A), ("ination", A), ("ingness", A),
    ("ionally", A), ("isation", A), ("ishness", A), ("istical", A),
    ("iteness", A), ("iveness", A), ("ivistic", A), ("ivities", A),
    ("ization", F), ("izement", A), ("oidally", A), ("ousness", A),

    ("aceous", A), ("acious", B), ("action", G), ("alness", A),
    ("ancial", A), ("ancies", A), ("ancing", B), ("ariser", A),
    ("arized", A), ("arizer", A), ("atable", A), ("ations", B),
    ("atives", A), ("eature", Z), ("efully", A), ("encies", A),
    ("encing", A), ("ential", A), ("enting", C), ("entist", A),
    ("eously", A), ("ialist", A), ("iality", A), ("ialize", A),
    ("ically", A), ("icance", A), ("icians", A), ("icists", A),
    ("ifully", A), ("ionals", A), ("ionate", D), ("ioning", A),
    ("ionist", A), ("iously", A), ("istics", A), ("izable", E),
    ("lessly", A), ("nesses", A), ("oidism", A),

    ("acies", A), ("acity", A), ("aging", B), ("aical", A),
    ("alist", A), ("alism", B), ("ality", A), ("alize", A),
    ("allic", BB), ("anced", B), ("ances", B), ("antic", C),
    ("arial", A), ("aries", A), ("arily", A), ("arity", B),
    ("arize", A), ("aroid", A), ("ately", A), ("ating", I),
    ("ation", B), ("ative", A), ("ators", A), ("atory", A),
    ("ature", E), ("early", Y), ("ehood", A), ("eless", A),
    ("elity", A), ("ement", A), ("enced", A), ("ences", A),
    ("eness", E), ("ening", E), ("ental", A), ("ented", C),
    ("ently", A), ("fully", A), ("ially", A), ("icant", A),
    ("ician", A), ("icide", A), ("icism", A), ("icist", A),
    ("icity", A), ("idine", I), ("iedly", A), ("ihood", A),
    ("inate", A), ("iness", A), ("ingly", B), ("inism", J),
    ("inity", CC), ("ional", A), ("ioned", A), ("ished", A),
    ("istic", A), ("ities", A), ("itous", A), ("ively", A),
    ("ivity", A), ("izers", F), ("izing", F), ("oidal", A),
    ("oides", A), ("otide", A), ("ously", A),

    ("able", A), ("ably", A), ("ages", B), ("ally", B),
    ("ance", B), ("ancy", B), ("ants", B), ("aric", A),
    ("arly", K), ("ated", I), ("ates", A), ("atic", B),
    ("ator", A), ("ealy", Y), ("edly", E), ("eful", A),
    ("eity", A), ("ence", A), ("ency", A), ("ened", E),
    ("enly", E), ("eous", A), ("hood", A), ("ials", A),
    ("ians", A), ("ible", A), ("ibly", A), ("ical", A),
    ("ides", L), ("iers", A), ("iful", A), ("ines", M),
    ("ings", N), ("ions", B), ("ious", A), ("isms", B),
    ("ists", A), ("itic", H), ("ized", F), ("izer", F),
    ("less", A), ("lily", A), ("ness", A), ("ogen", A),
    ("ward", A), ("wise", A), ("ying", B), ("yish", A),

    ("acy", A), ("age", B), ("aic", A), ("als", BB),
    ("ant", B), ("ars", O), ("ary", F), ("ata", A),
    ("ate", A), ("eal", Y), ("ear", Y), ("ely", E),
    ("ene", E), ("ent", C), ("ery", E), ("ese", A),
    ("ful", A), ("ial", A), ("ian", A), ("ics", A),
    ("ide", L), ("ied", A), ("ier", A), ("ies", P),
    ("ily", A), ("ine", M), ("ing", N), ("ion", Q),
    ("ish", C), ("ism", B), ("ist", A), ("ite", AA),
    ("ity", A), ("ium", A), ("ive", A), ("ize", F),
    ("oid", A), ("one", R), ("ous", A),

    ("ae", A), ("al", BB), ("ar", X), ("as", B),
    ("ed", E), ("en", F), ("es", E), ("ia", A),
    ("ic", A), ("is", A), ("ly", B), ("on", S),
    ("or", T), ("um", U), ("us", V), ("yl", R),
    ("s'", A), ("'s", A),

    ("a", A), ("e", A), ("i", A), ("o", A), ("s", W), ("y", B),
];

/// (ending, replacement, letters that block the rule when they precede the ending)
#[rustfmt::skip]
static RECODINGS: &[(&str, &str, &str)] = &[
    ("iev", "ief", ""), ("uct", "uc", ""), ("umpt", "um", ""), ("rpt", "rb", ""),
    ("urs", "ur", ""), ("istr", "ister", ""), ("metr", "meter", ""), ("olv", "olut", ""),
    ("ul", "l", "aoi"), ("bex", "bic", ""), ("dex", "dic", ""), ("pex", "pic", ""),
    ("tex", "tic", ""), ("ax", "ac", ""), ("ex", "ec", ""), ("ix", "ic", ""),
    ("lux", "luc", ""), ("uad", "uas", ""), ("vad", "vas", ""), ("cid", "cis", ""),
    ("lid", "lis", ""), ("erid", "eris", ""), ("pand", "pans", ""), ("end", "ens", "s"),
    ("ond", "ons", ""), ("lud", "lus", ""), ("rud", "rus", ""), ("her", "hes", "pt"),
    ("mit", "mis", ""), ("ent", "ens", "m"), ("ert", "ers", ""), ("et", "es", "n"),
    ("yt", "ys", ""), ("yz", "ys", ""),
];

const MIN_STEM: usize = 2;

fn nth_from_end(s: &[u8], n: usize) -> Option<u8> {
    s.len().checked_sub(n).map(|i| s[i])
}

impl Cond {
    fn holds(self, base: &[u8]) -> bool {
        let len = base.len();
        let last = nth_from_end(base, 1).unwrap_or(0);
        let second = nth_from_end(base, 2).unwrap_or(0);
        let third = nth_from_end(base, 3).unwrap_or(0);
        let ends = |suffix: &str| base.ends_with(suffix.as_bytes());
        match self {
            A => true,
            B => len >= 3,
            C => len >= 4,
            D => len >= 5,
            E => last != b'e',
            F => len >= 3 && last != b'e',
            G => len >= 3 && last == b'f',
            H => last == b't' || ends("ll"),
            I => last != b'o' && last != b'e',
            J => last != b'a' && last != b'e',
            K => len >= 3 && (last == b'l' || last == b'i' || (last == b'e' && third == b'u')),
            L => last != b'u' && last != b'x' && (last != b's' || second == b'o'),
            M => !matches!(last, b'a' | b'c' | b'e' | b'm'),
            N => len >= 3 && (third != b's' || len >= 4),
            O => last == b'l' || last == b'i',
            P => last != b'c',
            Q => len >= 3 && last != b'l' && last != b'n',
            R => last == b'n' || last == b'r',
            S => ends("dr") || (last == b't' && second != b't'),
            T => last == b's' || (last == b't' && second != b'o'),
            U => matches!(last, b'l' | b'm' | b'n' | b'r'),
            V => last == b'c',
            W => last != b's' && last != b'u',
            X => last == b'l' || last == b'i' || (last == b'e' && third == b'u'),
            Y => ends("in"),
            Z => last != b'f',
            AA => {
                matches!(last, b'd' | b'f' | b'l' | b't')
                    || ["ph", "th", "er", "or", "es"].iter().any(|s| ends(s))
            }
            BB => len >= 3 && !ends("met") && !ends("ryst"),
            CC => last == b'l',
        }
    }
}

fn remove_ending(word: &str) -> &str {
    let bytes = word.as_bytes();
    // ENDINGS is ordered by decreasing length, so the first hit is the longest match.
    for &(ending, cond) in ENDINGS {
        if bytes.len() >= ending.len() + MIN_STEM && word.ends_with(ending) {
            let base = &word[..word.len() - ending.len()];
            if cond.holds(base.as_bytes()) {
                return base;
            }
        }
    }
    word
}

fn recode(stem: &str) -> String {
    let mut s = stem.to_owned();
    let b = s.as_bytes();
    if b.len() > MIN_STEM {
        let n = b.len();
        if b[n - 1] == b[n - 2] && b"bdglmnprst".contains(&b[n - 1]) {
            s.pop();
        }
    }
    let longest = RECODINGS
        .iter()
        .filter(|(ending, _, _)| s.ends_with(ending))
        .max_by_key(|(ending, _, _)| ending.len());
    if let Some(&(ending, replacement, blocked_after)) = longest {
        let head = &s[..s.len() - ending.len()];
        let blocked = head
            .as_bytes()
            .last()
            .is_some_and(|c| blocked_after.as_bytes().contains(c));
        if !blocked && head.len() + replacement.len() >= MIN_STEM {
            return format!("{head}{replacement}");
        }
    }
    s
}

/// Stem a lowercase token. Tokens containing anything other than `a-z` and
/// apostrophes are returned unchanged.
pub fn lovins_stem(token: &str) -> String {
    if token.is_empty() || !token.bytes().all(|c| c.is_ascii_lowercase() || c == b'\'') {
        return token.to_owned();
    }
    recode(remove_ending(token))
}
