from tuqa.cli import main

main()
