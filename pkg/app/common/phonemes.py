VOWELS = ("a", "e", "i", "o", "u")

CONSONANTS = (
    "p",
    "t",
    "k",
    "b",
    "d",
    "g",
    "f",
    "s",
    "x",
    "θ",
    "tʃ",
    "m",
    "n",
    "ɲ",
    "l",
    "ʝ",
    "r",
    "ɾ",
    "w",
    "j",
)

STRESS = "ˈ"
WORD_BOUNDARY = "#"

DEFAULT_SYMBOLS = VOWELS + CONSONANTS + (STRESS, WORD_BOUNDARY)

# closed alphabet of normalized text
LETTERS = frozenset("abcdefghijklmnopqrstuvwxyzáéíóúüñ")
ACCENTED_VOWELS = {"á": "a", "é": "e", "í": "i", "ó": "o", "ú": "u"}
VOWEL_LETTERS = frozenset("aeiouáéíóúü")
STRONG_VOWEL_LETTERS = frozenset("aeoáéóíú")
FRONT_VOWEL_LETTERS = frozenset("eiéí")

# single letters with a context-free mapping
SIMPLE_LETTERS = {
    "b": ("b",),
    "d": ("d",),
    "f": ("f",),
    "k": ("k",),
    "l": ("l",),
    "m": ("m",),
    "n": ("n",),
    "ñ": ("ɲ",),
    "p": ("p",),
    "s": ("s",),
    "t": ("t",),
    "v": ("b",),
    "w": ("w",),
    "x": ("k", "s"),
    "z": ("θ",),
    "j": ("x",),
    "q": ("k",),
    "h": (),
}

# letters before a word-internal r that make it a trill
TRILL_TRIGGERS = frozenset("nls")
