// Runtime shim: one JSON event on stdin, one JSON response on stdout.
// With --serve-lines the process answers one event per input line.
package main

import (
	"bufio"
	"bytes"
	"encoding/json"
	"io"
	"os"
)

func refaasEncode(w io.Writer, v interface{}) error {
	var buf bytes.Buffer
	enc := json.NewEncoder(&buf)
	enc.SetEscapeHTML(false)
	if err := enc.Encode(v); err != nil {
		return err
	}
	_, err := w.Write(buf.Bytes())
	return err
}

func refaasDecode(data []byte) map[string]interface{} {
	var event map[string]interface{}
	if err := json.Unmarshal(data, &event); err != nil {
		os.Stderr.WriteString("invalid event: " + err.Error() + "\n")
		os.Exit(2)
	}
	return event
}

func main() {
	if len(os.Args) > 1 && os.Args[1] == "--serve-lines" {
		reader := bufio.NewReaderSize(os.Stdin, 1<<20)
		out := bufio.NewWriter(os.Stdout)
		for {
			line, err := reader.ReadBytes('\n')
			if len(bytes.TrimSpace(line)) > 0 {
				if encErr := refaasEncode(out, Handler(refaasDecode(line))); encErr != nil {
					os.Stderr.WriteString(encErr.Error() + "\n")
					os.Exit(3)
				}
				out.Flush()
			}
			if err != nil {
				return
			}
		}
	}
	data, err := io.ReadAll(os.Stdin)
	if err != nil {
		os.Exit(2)
	}
	if encErr := refaasEncode(os.Stdout, Handler(refaasDecode(data))); encErr != nil {
		os.Stderr.WriteString(encErr.Error() + "\n")
		os.Exit(3)
	}
}
