from cogspeech.cli import entry

entry()
