"""Static manifest of library symbols known to the analysis.

Library classes carry member tables so that ``Usage`` edges can point at
them. Globals are free identifiers the frontend resolves without a
declaration in the project.
"""

LIBRARY_CLASSES: dict[str, tuple[str, ...]] = {
    "String": ("length", "concat", "indexOf", "slice", "toUpperCase", "toLowerCase", "trim",
               "split", "startsWith", "endsWith", "charAt", "includes", "toString"),
    "Number": ("toFixed", "toString", "valueOf"),
    "Boolean": ("toString", "valueOf"),
    "Array": ("length", "push", "pop", "concat", "indexOf", "slice", "join", "reverse",
              "includes", "shift", "toString"),
    "Date": ("getTime", "getFullYear", "getMonth", "getDay", "toISOString", "setTime",
             "toString", "valueOf"),
    "Map": ("get", "set", "has", "delete", "clear", "size", "keys", "values"),
    "Set": ("add", "has", "delete", "clear", "size", "values"),
    "RegExp": ("test", "exec", "source", "flags", "lastIndex"),
    "Error": ("message", "name", "stack", "toString"),
    "Promise": ("then", "catch", "finally"),
}

LIBRARY_GLOBALS: tuple[str, ...] = (
    "readNumber", "readString", "parseInt", "parseFloat", "isNaN", "isFinite",
    "Math", "JSON", "console", "Date", "Map", "Set", "RegExp", "Error", "Promise",
    "Array", "Object", "String", "Number", "Boolean", "setTimeout", "now",
)

UNKNOWN_GLOBAL = "<unknown>"


def is_library_class(name: str) -> bool:
    return name in LIBRARY_CLASSES


def classes_with_member(label: str) -> list[str]:
    return [c for c, members in LIBRARY_CLASSES.items() if label in members]
